import hashlib
import logging
import os
import tempfile
import threading
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union
from urllib.parse import urlsplit

import requests

from .config import settings
from .corpus import write_manifest, write_text
from .errors import (
    FetchError,
    FetchTimeoutError,
    HttpStatusError,
    InvalidUrlError,
    ManifestError,
    TooManyRedirectsError,
)
from .models import ClassLabel, FetchRecord, LabeledPage, PageOrigin

logger = logging.getLogger(__name__)

MAX_REDIRECTS = 5
INDEX_COLUMNS = ("url", "hash", "status", "timestamp", "content_type", "final_url")

PathLike = Union[str, Path]


def url_hash(url: str) -> str:
    return hashlib.sha256(url.encode("utf-8")).hexdigest()


def validate_url(url: str) -> None:
    parts = urlsplit(url)
    if parts.scheme not in ("http", "https") or not parts.netloc:
        raise InvalidUrlError(f"Invalid url '{url}': only absolute http(s) urls can be fetched")


class CacheIndex:
    """
    Fetch log for one cache directory.

    Layout: ``index.tsv`` (append-only, the latest row for a url wins) and
    ``bodies/<sha256 of url>.html`` holding response bodies verbatim.
    """

    def __init__(self, cache_dir: PathLike):
        self.cache_dir = Path(cache_dir)
        self.index_path = self.cache_dir / "index.tsv"
        self.body_dir = self.cache_dir / "bodies"
        self._lock = threading.Lock()
        self._records: Optional[Dict[str, FetchRecord]] = None

    def _load(self) -> Dict[str, FetchRecord]:
        records: Dict[str, FetchRecord] = {}
        if self.index_path.is_file():
            for line in self.index_path.read_text(encoding="utf-8").splitlines():
                fields = line.split("\t")
                if len(fields) != len(INDEX_COLUMNS) or line.startswith("#"):
                    continue
                url, digest, status, timestamp, content_type, final_url = fields
                try:
                    ok = 200 <= int(status) < 300
                    records[url] = FetchRecord(
                        url=url,
                        status=int(status),
                        fetched_at=datetime.fromisoformat(timestamp),
                        body_path=self.body_dir / f"{digest}.html" if ok else None,
                        content_type=content_type,
                        final_url=final_url,
                    )
                except ValueError:
                    logger.warning("Skipping corrupt cache index row in %s: %r", self.index_path, line)
        return records

    def get(self, url: str) -> Optional[FetchRecord]:
        with self._lock:
            if self._records is None:
                self._records = self._load()
            return self._records.get(url)

    def _write_body(self, digest: str, body: bytes) -> Path:
        self.body_dir.mkdir(parents=True, exist_ok=True)
        target = self.body_dir / f"{digest}.html"
        # Readers only ever see a complete body: write aside, then rename over.
        fd, tmp = tempfile.mkstemp(dir=self.body_dir, suffix=".part")
        try:
            with os.fdopen(fd, "wb") as f:
                f.write(body)
            os.replace(tmp, target)
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise
        return target

    def store(self, url: str, status: int, body: bytes, content_type: str, final_url: str) -> FetchRecord:
        digest = url_hash(url)
        ok = 200 <= status < 300
        body_path = self._write_body(digest, body) if ok else None
        record = FetchRecord(
            url=url,
            status=status,
            fetched_at=datetime.now(timezone.utc),
            body_path=body_path,
            content_type=content_type,
            final_url=final_url,
        )
        row = "\t".join(
            (url, digest, str(status), record.fetched_at.isoformat(), content_type.replace("\t", " "), final_url)
        )
        with self._lock:
            if self._records is None:
                self._records = self._load()
            self.cache_dir.mkdir(parents=True, exist_ok=True)
            with open(self.index_path, "a", encoding="utf-8", newline="\n") as f:
                f.write(row + "\n")
            self._records[url] = record
        return record


_indexes: Dict[Path, CacheIndex] = {}
_indexes_lock = threading.Lock()


def cache_index_for(cache_dir: PathLike) -> CacheIndex:
    """One CacheIndex per directory, so all index writes go through a single writer."""
    key = Path(os.path.abspath(cache_dir))
    with _indexes_lock:
        if key not in _indexes:
            _indexes[key] = CacheIndex(key)
        return _indexes[key]


class PageFetcher:
    """
    Cached HTTP fetcher for home pages.
    """

    def __init__(self, user_agent: Optional[str] = None, max_redirects: int = MAX_REDIRECTS):
        """
        Initialize the fetcher.

        Args:
            user_agent: User-Agent header (default: settings.user_agent)
            max_redirects: Redirects followed before giving up.
        """
        self.user_agent = user_agent or settings.user_agent
        self.max_redirects = max_redirects
        self._local = threading.local()
        self._lock = threading.Lock()
        self._sessions: List[requests.Session] = []

    def __enter__(self) -> "PageFetcher":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    @property
    def open_sessions(self) -> int:
        with self._lock:
            return len(self._sessions)

    def _session(self) -> requests.Session:
        # One session per thread; close() releases them all.
        session = getattr(self._local, "session", None)
        if session is None:
            session = requests.Session()
            session.headers["User-Agent"] = self.user_agent
            session.max_redirects = self.max_redirects
            self._local.session = session
            with self._lock:
                self._sessions.append(session)
        return session

    def close(self) -> None:
        """Close every session opened so far; later fetches open new ones."""
        with self._lock:
            sessions, self._sessions = self._sessions, []
            self._local = threading.local()
        for session in sessions:
            session.close()

    def fetch_page(
        self,
        url: str,
        cache_dir: Optional[PathLike] = None,
        timeout: Optional[float] = None,
        refresh: bool = False,
    ) -> FetchRecord:
        """
        Return the cached record for ``url`` or GET it once.

        Args:
            url: Absolute http(s) url.
            cache_dir: Cache directory (default: settings.cache_dir).
            timeout: Seconds (default: settings.timeout).
            refresh: Ignore any cached copy and fetch again.

        Returns:
            The stored FetchRecord; ``final_url`` is the url after redirects.
        """
        validate_url(url)
        index = cache_index_for(cache_dir or settings.cache_dir)

        if not refresh:
            cached = index.get(url)
            if cached is not None and cached.ok and cached.body_path.is_file():
                logger.info("Cache hit for %s", url)
                return cached

        logger.info("Fetching %s", url)
        try:
            response = self._session().get(url, timeout=timeout or settings.timeout)
        except requests.exceptions.TooManyRedirects as e:
            raise TooManyRedirectsError(f"Failed to fetch {url}: more than {self.max_redirects} redirects") from e
        except requests.exceptions.Timeout as e:
            raise FetchTimeoutError(f"Failed to fetch {url}: timed out") from e
        except requests.exceptions.RequestException as e:
            raise FetchError(f"Failed to fetch {url}: {str(e)}") from e

        record = index.store(
            url,
            status=response.status_code,
            body=response.content,
            content_type=response.headers.get("Content-Type", ""),
            final_url=response.url,
        )
        if not record.ok:
            raise HttpStatusError(record)
        return record

    def fetch_manifest(
        self,
        urls: Sequence[str],
        labels: Sequence[ClassLabel],
        out_dir: PathLike,
        cache_dir: Optional[PathLike] = None,
        concurrency: Optional[int] = None,
        timeout: Optional[float] = None,
        refresh: bool = False,
    ) -> Path:
        """
        Fetch every url with at most ``concurrency`` requests in flight and
        write ``manifest.tsv`` plus ``failures.tsv`` into ``out_dir``.

        Returns:
            Path of the written manifest.
        """
        if len(urls) != len(labels):
            raise ValueError(f"{len(urls)} urls but {len(labels)} labels")
        concurrency = concurrency or settings.concurrency
        if concurrency < 1:
            raise ValueError("concurrency must be at least 1")
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)

        pages: List[LabeledPage] = []
        failures: List[Tuple[str, ClassLabel, str]] = []
        try:
            with ThreadPoolExecutor(max_workers=concurrency) as pool:
                futures = [pool.submit(self.fetch_page, url, cache_dir, timeout, refresh) for url in urls]
                for position, (url, label, future) in enumerate(zip(urls, labels, futures), start=1):
                    try:
                        record = future.result()
                    except FetchError as e:
                        logger.warning("%s", e)
                        failures.append((url, label, str(e)))
                        continue
                    pages.append(
                        LabeledPage(
                            id=f"page-{position:04d}",
                            origin=PageOrigin.from_url(record.final_url),
                            html_path=record.body_path,
                            label=label,
                        )
                    )
        finally:
            # Pool threads end here; release their sessions.
            self.close()

        manifest_path = write_manifest(pages, out_dir / "manifest.tsv")
        lines = ["# url\tclass\terror"] + [
            f"{url}\t{label.value}\t{error.replace(chr(9), ' ')}" for url, label, error in failures
        ]
        write_text(out_dir / "failures.tsv", "\n".join(lines) + "\n")
        logger.info("Fetched %d of %d pages (%d failures)", len(pages), len(urls), len(failures))
        return manifest_path


def read_url_list(path: PathLike) -> List[Tuple[str, ClassLabel]]:
    """Parse ``<url>\\t<class name>`` lines; blank lines and ``#`` comments are skipped."""
    path = Path(path)
    if not path.is_file():
        raise ManifestError("url list not found", path)
    entries = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = [field.strip() for field in line.split("\t")]
        if len(fields) != 2:
            raise ManifestError(f"expected '<url>\\t<class name>', got {len(fields)} fields", path, lineno)
        try:
            validate_url(fields[0])
            label = ClassLabel.parse(fields[1])
        except (InvalidUrlError, ValueError) as e:
            raise ManifestError(str(e), path, lineno) from None
        entries.append((fields[0], label))
    return entries


# Global fetcher instance
page_fetcher = PageFetcher()


def fetch_page(url: str, cache_dir: Optional[PathLike] = None, timeout: Optional[float] = None, refresh: bool = False) -> FetchRecord:
    return page_fetcher.fetch_page(url, cache_dir, timeout, refresh)


def fetch_manifest(
    urls: Sequence[str],
    labels: Sequence[ClassLabel],
    cache_dir: Optional[PathLike],
    concurrency: int,
    out_dir: PathLike,
    timeout: Optional[float] = None,
    refresh: bool = False,
) -> Path:
    return page_fetcher.fetch_manifest(urls, labels, out_dir, cache_dir, concurrency, timeout, refresh)
