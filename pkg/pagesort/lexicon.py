import logging
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Optional

from pydantic import ValidationError

from .config import DEFAULT_LEXICON_PATH
from .errors import LexiconError
from .models import BuzzwordLexicon, ClassLabel

logger = logging.getLogger(__name__)


def parse_lexicon(text: str, source: str = "<string>") -> BuzzwordLexicon:
    """
    Parse the lexicon format: one ``<ClassName>: word, word, ...`` line per
    class. Blank lines and ``#`` comments are ignored; words are lowercased
    and repeated words collapse to one entry.
    """
    entries: Dict[ClassLabel, List[str]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        name, sep, words = line.partition(":")
        if not sep:
            raise LexiconError(f"{source}:{lineno}: expected '<ClassName>: word, ...'")
        try:
            label = ClassLabel.parse(name.strip())
        except ValueError as e:
            raise LexiconError(f"{source}:{lineno}: {e}") from None
        if label in entries:
            raise LexiconError(f"{source}:{lineno}: class {label.value} listed twice")
        entries[label] = [word.strip().lower() for word in words.split(",") if word.strip()]

    try:
        return BuzzwordLexicon(entries=entries)
    except ValidationError as e:
        raise LexiconError(f"{source}: invalid lexicon: {e}") from e


def load_lexicon(path: Optional[Path] = None) -> BuzzwordLexicon:
    path = Path(path) if path else DEFAULT_LEXICON_PATH
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise LexiconError(f"Failed to read lexicon {path}: {e}") from e
    lexicon = parse_lexicon(text, source=str(path))
    logger.debug("Loaded lexicon with %d words from %s", sum(len(w) for w in lexicon.entries.values()), path)
    return lexicon


@lru_cache(maxsize=1)
def default_lexicon() -> BuzzwordLexicon:
    """The bundled lexicon."""
    return load_lexicon(DEFAULT_LEXICON_PATH)
