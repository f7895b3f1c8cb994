"""
Dataset management: page manifests, feature files, the train/test split,
the class prototype table and model files.
"""
import logging
import math
import os
from collections import Counter
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, TypeVar, Union

import numpy as np
from pydantic import ValidationError
from sklearn.model_selection import train_test_split

from .config import DEFAULT_PROTOTYPES_PATH, FeatureConfig
from .errors import EmptyDatasetError, FeaturesFileError, ManifestError, ModelFormatError, PagesortError
from .html_features import extract_features, format_feature_row, parse_feature_row
from .mlp import ARCHITECTURE, PARAM_SHAPES, Network
from .models import BuzzwordLexicon, ClassLabel, FeatureRow, FeatureVector, LabeledPage, PageOrigin, SplitSpec

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
T = TypeVar("T")

MODEL_HEADER = "pagesort-mlp v1"
MANIFEST_HEADER = "# id\turl\thtml_path\tclass"


def write_text(path: Path, text: str) -> None:
    # Fixed "\n" endings keep generated files byte-identical on every platform.
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


# ---------------------------------------------------------------------------
# Manifests
# ---------------------------------------------------------------------------

def load_manifest(path: PathLike, check_files: bool = True) -> List[LabeledPage]:
    """
    Load a page manifest: ``<id>\\t<url>\\t<relative html path>\\t<class>``
    per line, ``#`` comments allowed. HTML paths are relative to the
    manifest's directory.

    Raises:
        ManifestError: missing file, malformed line, unknown class,
            duplicate id, invalid url or (with check_files) missing html.
    """
    path = Path(path)
    if not path.is_file():
        raise ManifestError("manifest not found", path)
    base = Path(os.path.abspath(path.parent))

    pages: List[LabeledPage] = []
    first_seen: Dict[str, int] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = [field.strip() for field in line.split("\t")]
        if len(fields) != 4:
            raise ManifestError(
                f"expected 4 tab-separated fields (id, url, html path, class), got {len(fields)}", path, lineno
            )
        page_id, url, relative, class_name = fields
        if not page_id:
            raise ManifestError("empty page id", path, lineno)
        if page_id in first_seen:
            raise ManifestError(f"duplicate id '{page_id}' (first on line {first_seen[page_id]})", path, lineno)
        try:
            label = ClassLabel.parse(class_name)
        except ValueError as e:
            raise ManifestError(str(e), path, lineno) from None
        try:
            origin = PageOrigin.from_url(url)
        except ValidationError:
            raise ManifestError(f"page '{page_id}': invalid url '{url}'", path, lineno) from None

        html_path = Path(os.path.normpath(base / relative))
        if check_files and not html_path.is_file():
            raise ManifestError(f"page '{page_id}': html file not found: {html_path}", path, lineno)

        first_seen[page_id] = lineno
        pages.append(LabeledPage(id=page_id, origin=origin, html_path=html_path, label=label))

    logger.info("Loaded %d pages from %s", len(pages), path)
    return pages


def write_manifest(pages: Sequence[LabeledPage], path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    base = os.path.abspath(path.parent)
    lines = [MANIFEST_HEADER]
    for page in pages:
        relative = Path(os.path.relpath(page.html_path, base)).as_posix()
        lines.append("\t".join((page.id, page.origin.url, relative, page.label.value)))
    write_text(path, "\n".join(lines) + "\n")
    return path


# ---------------------------------------------------------------------------
# Feature files
# ---------------------------------------------------------------------------

def read_features(path: PathLike) -> List[FeatureRow]:
    path = Path(path)
    if not path.is_file():
        raise FeaturesFileError("features file not found", path)
    rows = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        try:
            rows.append(parse_feature_row(line))
        except ValueError as e:
            raise FeaturesFileError(str(e), path, lineno) from None
    return rows


def write_features(rows: Sequence[FeatureRow], path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = "".join(format_feature_row(row.url, row.vector, row.label) + "\n" for row in rows)
    write_text(path, text)
    return path


def labeled_samples(rows: Sequence[FeatureRow]) -> List[Tuple[FeatureVector, ClassLabel]]:
    """(vector, label) pairs for training or evaluation; every row needs a label."""
    missing = [row.url for row in rows if row.label is None]
    if missing:
        raise FeaturesFileError(f"{len(missing)} rows have no class label (first: {missing[0]})")
    return [(row.vector, row.label) for row in rows]


def extract_pages(
    pages: Sequence[LabeledPage],
    lexicon: Optional[BuzzwordLexicon] = None,
    config: Optional[FeatureConfig] = None,
) -> Tuple[List[FeatureRow], List[Tuple[str, str]]]:
    """
    Extract feature rows for every page in a manifest.

    Returns:
        (rows for pages that could be read, [(page id, error message)] for the rest)
    """
    rows: List[FeatureRow] = []
    failures: List[Tuple[str, str]] = []
    for page in pages:
        try:
            html = page.html_path.read_bytes()
        except OSError as e:
            logger.warning("Failed to read page %s: %s", page.id, e)
            failures.append((page.id, f"cannot read {page.html_path}: {e.strerror or e}"))
            continue
        vector = extract_features(html, page.origin, lexicon, config)
        rows.append(FeatureRow(url=page.origin.url, vector=vector, label=page.label))
    return rows, failures


# ---------------------------------------------------------------------------
# Train / test split
# ---------------------------------------------------------------------------

def _round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def _can_stratify(counts: Counter, n_train: int, n_test: int) -> bool:
    # train_test_split needs two members per class and room for every class on both sides.
    n_classes = len(counts)
    return min(counts.values()) >= 2 and n_classes <= min(n_train, n_test)


def split(items: Sequence[T], spec: SplitSpec) -> Tuple[List[T], List[T]]:
    """
    Seeded train/test partition of labeled items (pages or feature rows).

    The training side gets round(train_fraction * n) items. When
    stratified, each class contributes floor or ceil of its own share;
    sets whose classes are too small to stratify fall back to a plain
    seeded shuffle. Both sides keep the input order.
    """
    if not items:
        raise EmptyDatasetError("cannot split an empty set")
    n_train = _round_half_up(spec.train_fraction * len(items))
    if n_train == 0:
        return [], list(items)
    if n_train == len(items):
        return list(items), []

    stratify = None
    if spec.stratified:
        labels = [getattr(item, "label", None) for item in items]
        if any(label is None for label in labels):
            raise ValueError("every item needs a class label for a stratified split")
        counts = Counter(labels)
        if len(counts) > 1:
            if _can_stratify(counts, n_train, len(items) - n_train):
                stratify = [label.index for label in labels]
            else:
                logger.warning("Classes too small to stratify %d items; using a plain shuffle", len(items))

    train_idx, test_idx = train_test_split(
        np.arange(len(items)),
        train_size=n_train,
        test_size=len(items) - n_train,
        random_state=spec.seed,
        shuffle=True,
        stratify=stratify,
    )
    train = [items[i] for i in np.sort(train_idx)]
    test = [items[i] for i in np.sort(test_idx)]
    logger.info("Split %d items into %d train / %d test", len(items), len(train), len(test))
    return train, test


# ---------------------------------------------------------------------------
# Prototype table
# ---------------------------------------------------------------------------

def load_prototypes(path: Optional[PathLike] = None) -> Dict[ClassLabel, FeatureVector]:
    """Read ``<class>\\t<five values>`` rows; every class must appear once."""
    path = Path(path) if path else DEFAULT_PROTOTYPES_PATH
    if not path.is_file():
        raise ManifestError("prototype table not found", path)
    prototypes: Dict[ClassLabel, FeatureVector] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split("\t")
        try:
            if len(fields) != 6:
                raise ValueError(f"expected class and 5 values, got {len(fields)} fields")
            label = ClassLabel.parse(fields[0].strip())
            if label in prototypes:
                raise ValueError(f"class {label.value} listed twice")
            prototypes[label] = FeatureVector.from_list([float(field) for field in fields[1:]])
        except ValueError as e:
            raise ManifestError(str(e), path, lineno) from None
    missing = [label.value for label in ClassLabel if label not in prototypes]
    if missing:
        raise ManifestError(f"prototype table is missing classes: {', '.join(missing)}", path)
    return {label: prototypes[label] for label in ClassLabel}


# ---------------------------------------------------------------------------
# Model files
# ---------------------------------------------------------------------------

def _format_values(values: np.ndarray) -> str:
    return " ".join(format(float(v), ".17g") for v in values)


def save_model(net: Network, path: PathLike) -> Path:
    """
    Write the versioned text model: header, architecture, then the rows of
    w_ih, b_h, w_ho and b_o at 17 significant digits (exact round trip).
    """
    path = Path(path)
    lines = [MODEL_HEADER, " ".join(str(n) for n in ARCHITECTURE)]
    lines += [_format_values(row) for row in net.w_ih]
    lines.append(_format_values(net.b_h))
    lines += [_format_values(row) for row in net.w_ho]
    lines.append(_format_values(net.b_o))
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        write_text(path, "\n".join(lines) + "\n")
    except OSError as e:
        raise PagesortError(f"Failed to write model {path}: {e}") from e
    logger.info("Saved model to %s", path)
    return path


def load_model(path: PathLike) -> Network:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ModelFormatError(f"Model file not found: {path}") from None
    except OSError as e:
        raise ModelFormatError(f"Failed to read model {path}: {e}") from e

    lines = [line.strip() for line in text.splitlines() if line.strip()]
    if not lines or lines[0] != MODEL_HEADER:
        found = lines[0] if lines else "<empty file>"
        raise ModelFormatError(f"{path}: expected header '{MODEL_HEADER}', got '{found}'")
    try:
        architecture = tuple(int(n) for n in lines[1].split()) if len(lines) > 1 else ()
    except ValueError:
        architecture = ()
    if architecture != ARCHITECTURE:
        raise ModelFormatError(
            f"{path}: architecture {' '.join(map(str, architecture)) or '?'} does not match "
            f"{' '.join(map(str, ARCHITECTURE))}"
        )

    rows = iter(lines[2:])
    arrays = {}
    try:
        for name in ("w_ih", "b_h", "w_ho", "b_o"):
            shape = PARAM_SHAPES[name]
            n_rows = shape[0] if len(shape) == 2 else 1
            values = [[float(v) for v in next(rows).split()] for _ in range(n_rows)]
            arrays[name] = np.array(values if len(shape) == 2 else values[0], dtype=np.float64)
        if next(rows, None) is not None:
            raise ValueError("trailing data after b_o")
        return Network(**arrays)
    except StopIteration:
        raise ModelFormatError(f"{path}: truncated model file") from None
    except ValueError as e:
        raise ModelFormatError(f"{path}: {e}") from e
