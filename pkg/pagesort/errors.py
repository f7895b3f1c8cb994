from pathlib import Path
from typing import TYPE_CHECKING, Optional, Union

if TYPE_CHECKING:
    from .models import FetchRecord


class PagesortError(Exception):
    """Base class for every error raised by the toolkit."""


class LexiconError(PagesortError):
    pass


class FeatureConfigError(PagesortError):
    pass


class ManifestError(PagesortError):
    """
    A manifest or URL list could not be loaded.

    Carries the file and the 1-based line number when the problem is tied
    to a single line.
    """

    def __init__(self, message: str, path: Optional[Union[str, Path]] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        if path is not None and line is not None:
            message = f"{path}:{line}: {message}"
        elif path is not None:
            message = f"{path}: {message}"
        super().__init__(message)


class FeaturesFileError(ManifestError):
    pass


class ModelFormatError(PagesortError):
    pass


class EmptyDatasetError(PagesortError):
    pass


class TrainingDivergedError(PagesortError):
    pass


class ReportFormatError(PagesortError):
    pass


class FetchError(PagesortError):
    pass


class InvalidUrlError(FetchError):
    pass


class FetchTimeoutError(FetchError):
    pass


class TooManyRedirectsError(FetchError):
    pass


class HttpStatusError(FetchError):
    """Non-success HTTP status; the record is already in the cache index."""

    def __init__(self, record: "FetchRecord"):
        self.record = record
        super().__init__(f"Failed to fetch {record.url}: HTTP {record.status}")
