"""
Run the pagesort command-line pipeline.
"""
import sys

from pagesort.cli import main

if __name__ == "__main__":
    sys.exit(main())
