import math
from datetime import datetime
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple
from urllib.parse import urlsplit

import tldextract
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeInt,
    PrivateAttr,
    computed_field,
    field_validator,
    model_validator,
)


class ClassLabel(str, Enum):
    """
    The eight page categories. Declaration order is the 3-bit output
    pattern order, so ``index`` is also the integer value of ``bits``.
    """

    BUSINESS_ECONOMY = "BusinessEconomy"
    EDUCATION = "Education"
    GOVERNMENT = "Government"
    NEWS_MEDIA = "NewsMedia"
    SPORTS = "Sports"
    JOB_SEARCH = "JobSearch"
    ENTERTAINMENT = "Entertainment"
    SCIENCE = "Science"

    @property
    def index(self) -> int:
        return _LABEL_ORDER.index(self)

    @property
    def bits(self) -> Tuple[int, int, int]:
        i = self.index
        return ((i >> 2) & 1, (i >> 1) & 1, i & 1)

    @property
    def display_name(self) -> str:
        return _DISPLAY_NAMES[self]

    @classmethod
    def from_bits(cls, bits: Sequence[int]) -> "ClassLabel":
        b0, b1, b2 = bits
        return _LABEL_ORDER[(b0 << 2) | (b1 << 1) | b2]

    @classmethod
    def parse(cls, name: str) -> "ClassLabel":
        """Look up a canonical class name, naming all valid ones on failure."""
        try:
            return cls(name)
        except ValueError:
            valid = ", ".join(label.value for label in cls)
            raise ValueError(f"unknown class name '{name}' (valid: {valid})") from None


_LABEL_ORDER: List[ClassLabel] = list(ClassLabel)

_DISPLAY_NAMES = {
    ClassLabel.BUSINESS_ECONOMY: "Business & Economy",
    ClassLabel.EDUCATION: "Education",
    ClassLabel.GOVERNMENT: "Government",
    ClassLabel.NEWS_MEDIA: "News & Media",
    ClassLabel.SPORTS: "Sports",
    ClassLabel.JOB_SEARCH: "Job Search",
    ClassLabel.ENTERTAINMENT: "Entertainment",
    ClassLabel.SCIENCE: "Science",
}

# Offline: the bundled public suffix snapshot keeps results identical across machines.
_domain_extractor = tldextract.TLDExtract(suffix_list_urls=(), cache_dir=None)


@lru_cache(maxsize=65536)
def registrable_domain(host: str) -> str:
    """
    Domain one level below the public suffix (``a.example.co.uk`` ->
    ``example.co.uk``). Hosts without a known suffix (IPs, ``localhost``)
    are their own registrable domain.
    """
    host = host.lower().rstrip(".")
    parts = _domain_extractor(host)
    if parts.domain and parts.suffix:
        return f"{parts.domain}.{parts.suffix}"
    return host


class PageOrigin(BaseModel):
    model_config = ConfigDict(frozen=True)

    url: str
    host: str
    registrable_domain: str

    @model_validator(mode="after")
    def _check_consistent(self) -> "PageOrigin":
        parsed = urlsplit(self.url)
        if not parsed.scheme or not parsed.hostname:
            raise ValueError(f"origin url must be absolute: '{self.url}'")
        if parsed.hostname != self.host:
            raise ValueError(f"host '{self.host}' does not match url '{self.url}'")
        if not (self.host == self.registrable_domain or self.host.endswith("." + self.registrable_domain)):
            raise ValueError(f"'{self.registrable_domain}' is not a suffix of host '{self.host}'")
        return self

    @classmethod
    def from_url(cls, url: str) -> "PageOrigin":
        host = urlsplit(url).hostname or ""
        return cls(url=url, host=host, registrable_domain=registrable_domain(host) if host else "")


class BuzzwordLexicon(BaseModel):
    model_config = ConfigDict(frozen=True)

    entries: Dict[ClassLabel, Tuple[str, ...]]

    _index: Dict[str, Tuple[ClassLabel, ...]] = PrivateAttr(default_factory=dict)

    @field_validator("entries")
    @classmethod
    def _check_entries(cls, entries: Dict[ClassLabel, Tuple[str, ...]]) -> Dict[ClassLabel, Tuple[str, ...]]:
        missing = [label.value for label in ClassLabel if label not in entries]
        if missing:
            raise ValueError(f"lexicon is missing classes: {', '.join(missing)}")
        for label, words in entries.items():
            for word in words:
                if not word or word != word.lower() or any(ch.isspace() for ch in word):
                    raise ValueError(f"invalid buzzword '{word}' for {label.value}")
        return {label: tuple(dict.fromkeys(entries[label])) for label in ClassLabel}

    def model_post_init(self, __context) -> None:
        index: Dict[str, List[ClassLabel]] = {}
        for label, words in self.entries.items():
            for word in words:
                index.setdefault(word, []).append(label)
        self._index = {word: tuple(labels) for word, labels in index.items()}

    def classes_for(self, token: str) -> Tuple[ClassLabel, ...]:
        """Classes that list ``token`` (already lowercased) as a buzzword."""
        return self._index.get(token, ())


class RawPageStats(BaseModel):
    model_config = ConfigDict(frozen=True)

    internal_links: NonNegativeInt = 0
    external_links: NonNegativeInt = 0
    buzzword_hits: Dict[ClassLabel, NonNegativeInt] = Field(
        default_factory=lambda: {label: 0 for label in ClassLabel}
    )
    image_count: NonNegativeInt = 0
    declared_image_area: NonNegativeInt = 0
    images_with_dims: NonNegativeInt = 0
    animation_count: NonNegativeInt = 0
    dynamic_internal_links: NonNegativeInt = 0
    total_words: NonNegativeInt = 0

    @field_validator("buzzword_hits")
    @classmethod
    def _complete_hits(cls, hits: Dict[ClassLabel, int]) -> Dict[ClassLabel, int]:
        missing = [label.value for label in ClassLabel if label not in hits]
        if missing:
            raise ValueError(f"buzzword_hits is missing classes: {', '.join(missing)}")
        return {label: hits[label] for label in ClassLabel}

    @model_validator(mode="after")
    def _check_bounds(self) -> "RawPageStats":
        if self.dynamic_internal_links > self.internal_links:
            raise ValueError("dynamic_internal_links exceeds internal_links")
        if self.images_with_dims > self.image_count:
            raise ValueError("images_with_dims exceeds image_count")
        return self


DYNAMIC_LEVELS = tuple(k / 10 for k in range(11))

FEATURE_NAMES = ("link_ratio", "buzzword", "images", "animation", "dynamic")


class FeatureVector(BaseModel):
    """The five network inputs, each in [0, 1]."""

    model_config = ConfigDict(frozen=True)

    link_ratio: float = 0.0
    buzzword: float = 0.0
    images: float = 0.0
    animation: float = 0.0
    dynamic: float = 0.0

    @field_validator(*FEATURE_NAMES)
    @classmethod
    def _in_unit_interval(cls, value: float) -> float:
        if not math.isfinite(value) or not 0.0 <= value <= 1.0:
            raise ValueError(f"feature value {value} outside [0, 1]")
        return value

    @field_validator("dynamic")
    @classmethod
    def _on_dynamic_level(cls, value: float) -> float:
        if value not in DYNAMIC_LEVELS:
            raise ValueError(f"dynamic value {value} is not one of {DYNAMIC_LEVELS}")
        return value

    def as_list(self) -> List[float]:
        return [self.link_ratio, self.buzzword, self.images, self.animation, self.dynamic]

    @classmethod
    def from_list(cls, values: Sequence[float]) -> "FeatureVector":
        if len(values) != len(FEATURE_NAMES):
            raise ValueError(f"expected {len(FEATURE_NAMES)} feature values, got {len(values)}")
        return cls(**dict(zip(FEATURE_NAMES, (float(v) for v in values))))


class FeatureRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    url: str
    vector: FeatureVector
    label: Optional[ClassLabel] = None


class TrainConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    learning_rate: float = Field(0.5, gt=0)
    epochs: int = Field(2000, ge=1)
    seed: int = Field(42, ge=0)
    target_mse: float = Field(0.01, ge=0)
    init_scale: float = Field(0.5, ge=0)


class TrainReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    epochs_run: int
    final_mse: float
    mse_history: Tuple[float, ...]

    @model_validator(mode="after")
    def _check_history(self) -> "TrainReport":
        if len(self.mse_history) != self.epochs_run:
            raise ValueError("mse_history length must equal epochs_run")
        if self.mse_history and self.final_mse != self.mse_history[-1]:
            raise ValueError("final_mse must be the last history entry")
        return self


class LabeledPage(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: str
    origin: PageOrigin
    html_path: Path
    label: ClassLabel


class SplitSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    train_fraction: float = Field(0.4, gt=0, lt=1)
    seed: int = Field(42, ge=0)
    stratified: bool = True


class ClassTally(BaseModel):
    model_config = ConfigDict(frozen=True)

    right: int
    wrong: int


class EvalReport(BaseModel):
    """
    Per-class right/wrong counts and the confusion matrix (rows: true
    class, columns: predicted class, both in ClassLabel order). Every total
    is derived from the matrix.
    """

    model_config = ConfigDict(frozen=True)

    set_name: str = "test"
    confusion: Tuple[Tuple[int, ...], ...]

    @field_validator("confusion")
    @classmethod
    def _check_matrix(cls, matrix: Tuple[Tuple[int, ...], ...]) -> Tuple[Tuple[int, ...], ...]:
        n = len(ClassLabel)
        if len(matrix) != n or any(len(row) != n for row in matrix):
            raise ValueError(f"confusion matrix must be {n}x{n}")
        if any(cell < 0 for row in matrix for cell in row):
            raise ValueError("confusion counts must be non-negative")
        return matrix

    @classmethod
    def from_confusion(cls, matrix: Sequence[Sequence[int]], set_name: str = "test") -> "EvalReport":
        return cls(set_name=set_name, confusion=tuple(tuple(int(c) for c in row) for row in matrix))

    @computed_field
    @property
    def per_class(self) -> Dict[ClassLabel, ClassTally]:
        tallies = {}
        for label in ClassLabel:
            row = self.confusion[label.index]
            right = row[label.index]
            tallies[label] = ClassTally(right=right, wrong=sum(row) - right)
        return tallies

    @computed_field
    @property
    def total_right(self) -> int:
        return sum(self.confusion[i][i] for i in range(len(ClassLabel)))

    @computed_field
    @property
    def total_wrong(self) -> int:
        return sum(sum(row) for row in self.confusion) - self.total_right

    @computed_field
    @property
    def accuracy(self) -> float:
        total = self.total_right + self.total_wrong
        return self.total_right / total if total else 0.0


class FetchRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    url: str
    status: int
    fetched_at: datetime
    body_path: Optional[Path] = None
    content_type: str = ""
    final_url: str

    @property
    def ok(self) -> bool:
        return 200 <= self.status < 300

    @model_validator(mode="after")
    def _body_iff_success(self) -> "FetchRecord":
        if self.ok != (self.body_path is not None):
            raise ValueError("body_path must be set exactly when the status is a success")
        return self
