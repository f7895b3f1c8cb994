"""
Feature extraction from raw HTML.

Stage one counts structural and lexical signals in a page (links, buzzwords,
images, animations, dynamic links); stage two squashes those counts into
the five network inputs, every one in [0, 1].
"""
import logging
import re
from pathlib import PurePosixPath
from typing import Dict, Iterator, Mapping, Optional, Tuple, Union
from urllib.parse import urljoin, urlsplit

from bs4 import BeautifulSoup, Comment, Declaration, Doctype, ProcessingInstruction

from .config import FeatureConfig
from .lexicon import default_lexicon
from .models import (
    BuzzwordLexicon,
    ClassLabel,
    FeatureRow,
    FeatureVector,
    PageOrigin,
    RawPageStats,
    registrable_domain,
)

logger = logging.getLogger(__name__)

Markup = Union[str, bytes]

_DEFAULT_CONFIG = FeatureConfig()

_TOKEN_RE = re.compile(r"[^\W_]+")
_PIXELS_RE = re.compile(r"\s*([0-9]+)\s*")
_NAVIGATIONAL_SCHEMES = ("http", "https")
_HIDDEN_TEXT_PARENTS = frozenset({"script", "style"})
_NON_TEXT_STRINGS = (Comment, Declaration, Doctype, ProcessingInstruction)


def decode_html(data: Markup) -> str:
    """UTF-8 decode; invalid byte sequences become U+FFFD instead of failing."""
    if isinstance(data, str):
        return data
    return data.decode("utf-8", errors="replace")


def _parse(html: Markup) -> BeautifulSoup:
    # html.parser ships with Python, so trees are the same on every platform.
    text = decode_html(html)
    try:
        return BeautifulSoup(text, "html.parser")
    except Exception as e:
        logger.warning("HTML parser rejected markup, treating page as empty: %s", e)
        return BeautifulSoup("", "html.parser")


# ---------------------------------------------------------------------------
# Raw counts
# ---------------------------------------------------------------------------

def _links_in(soup: BeautifulSoup, origin: PageOrigin, config: FeatureConfig) -> Tuple[int, int, int]:
    internal = external = dynamic = 0
    for anchor in soup.find_all("a", href=True):
        href = anchor["href"].strip()
        if not href or href.startswith("#"):
            continue
        try:
            target = urlsplit(urljoin(origin.url, href))
            host = target.hostname
        except ValueError as e:
            logger.debug("Skipping unparseable href %r: %s", href, e)
            continue
        if target.scheme not in _NAVIGATIONAL_SCHEMES or not host:
            continue

        if registrable_domain(host) != origin.registrable_domain:
            external += 1
            continue
        internal += 1
        extension = PurePosixPath(target.path).suffix[1:].lower()
        if target.query or extension in config.dynamic_extensions:
            dynamic += 1
    return internal, external, dynamic


def parse_links(html: Markup, origin: PageOrigin, config: Optional[FeatureConfig] = None) -> Tuple[int, int, int]:
    """
    Count anchor hyperlinks as (internal, external, dynamic_internal).

    A link is internal when it resolves to the origin's registrable domain
    (relative links always do). Fragment-only links and anything that does
    not resolve to http(s) (mailto:, javascript:, tel:, ...) are not links.
    An internal link is dynamic when it has a query string or a dynamic
    path extension.
    """
    return _links_in(_parse(html), origin, config or _DEFAULT_CONFIG)


def _visible_strings(soup: BeautifulSoup, include_title: bool) -> Iterator[str]:
    hidden = _HIDDEN_TEXT_PARENTS if include_title else _HIDDEN_TEXT_PARENTS | {"title"}
    for string in soup.find_all(string=True):
        if isinstance(string, _NON_TEXT_STRINGS):
            continue
        if any(parent.name in hidden for parent in string.parents):
            continue
        yield str(string)


def _meta_strings(soup: BeautifulSoup) -> Iterator[str]:
    for meta in soup.find_all("meta"):
        if str(meta.get("name", "")).lower() in ("keywords", "description"):
            yield str(meta.get("content", ""))


def _buzzwords_in(
    soup: BeautifulSoup, lexicon: BuzzwordLexicon, config: FeatureConfig
) -> Tuple[Dict[ClassLabel, int], int]:
    hits = {label: 0 for label in ClassLabel}
    total = 0
    strings = _visible_strings(soup, config.buzzword_include_title)
    chunks = list(strings) + (list(_meta_strings(soup)) if config.buzzword_include_meta else [])
    for chunk in chunks:
        for token in _TOKEN_RE.findall(chunk.lower()):
            total += 1
            for label in lexicon.classes_for(token):
                hits[label] += 1
    return hits, total


def count_buzzwords(
    html: Markup, lexicon: Optional[BuzzwordLexicon] = None, config: Optional[FeatureConfig] = None
) -> Tuple[Dict[ClassLabel, int], int]:
    """
    Count whole-token, case-insensitive buzzword hits per class.

    Only text content is scanned: tags, attributes, comments and script or
    style bodies never contribute. A word listed under two classes counts
    for both.

    Returns:
        (hits per class, total number of tokens)
    """
    return _buzzwords_in(_parse(html), lexicon or default_lexicon(), config or _DEFAULT_CONFIG)


def _pixels(value) -> Optional[int]:
    if value is None:
        return None
    match = _PIXELS_RE.fullmatch(str(value))
    if not match:
        return None
    pixels = int(match.group(1))
    return pixels if pixels > 0 else None


def _images_in(soup: BeautifulSoup) -> Tuple[int, int, int]:
    count = area = with_dims = 0
    for image in soup.find_all("img"):
        count += 1
        width, height = _pixels(image.get("width")), _pixels(image.get("height"))
        if width and height:
            area += width * height
            with_dims += 1
    return count, area, with_dims


def count_images(html: Markup) -> Tuple[int, int, int]:
    """
    Count ``img`` tags.

    Returns:
        (image count, declared area in px^2, images with both dimensions)
    """
    return _images_in(_parse(html))


def _is_gif(src) -> bool:
    try:
        return urlsplit(str(src).strip()).path.lower().endswith(".gif")
    except ValueError:
        return False


def _animations_in(soup: BeautifulSoup, config: FeatureConfig) -> int:
    count = 0
    if config.count_gif_animations:
        count += sum(1 for image in soup.find_all("img", src=True) if _is_gif(image["src"]))
    if config.count_plugin_animations:
        count += len(soup.find_all(["object", "embed"]))
    if config.count_marquee_animations:
        count += len(soup.find_all("marquee"))
    return count


def count_animations(html: Markup, config: Optional[FeatureConfig] = None) -> int:
    """Animated GIFs, object/embed plugins (Flash) and marquees, one each."""
    return _animations_in(_parse(html), config or _DEFAULT_CONFIG)


def extract_stats(
    html: Markup,
    origin: PageOrigin,
    lexicon: Optional[BuzzwordLexicon] = None,
    config: Optional[FeatureConfig] = None,
) -> RawPageStats:
    config = config or _DEFAULT_CONFIG
    soup = _parse(html)
    internal, external, dynamic = _links_in(soup, origin, config)
    hits, total_words = _buzzwords_in(soup, lexicon or default_lexicon(), config)
    image_count, area, with_dims = _images_in(soup)
    return RawPageStats(
        internal_links=internal,
        external_links=external,
        buzzword_hits=hits,
        image_count=image_count,
        declared_image_area=area,
        images_with_dims=with_dims,
        animation_count=_animations_in(soup, config),
        dynamic_internal_links=dynamic,
        total_words=total_words,
    )


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------

def _saturate(x: float, k: float) -> float:
    return x / (x + k) if x > 0 else 0.0


def normalize_link_ratio(internal: int, external: int) -> float:
    """
    r / (1 + r) for r = external / internal; no internal links saturates
    to 1.0 when there is anything external.
    """
    if external == 0:
        return 0.0
    if internal == 0:
        return 1.0
    # r / (1 + r) with r = e / i, in one division
    return external / (internal + external)


def normalize_buzzword(hits: Mapping[ClassLabel, int], config: Optional[FeatureConfig] = None) -> float:
    """Saturated hit total of the strongest class."""
    config = config or _DEFAULT_CONFIG
    return _saturate(max(hits.values(), default=0), config.buzzword_saturation)


def normalize_images(stats: RawPageStats, config: Optional[FeatureConfig] = None) -> float:
    # Declared area stays in the stats for diagnostics; the count drives the feature.
    config = config or _DEFAULT_CONFIG
    return _saturate(stats.image_count, config.image_saturation)


def normalize_animation(count: int, config: Optional[FeatureConfig] = None) -> float:
    config = config or _DEFAULT_CONFIG
    return _saturate(count, config.animation_saturation)


def normalize_dynamic(dynamic_internal: int, internal: int) -> float:
    """
    Bucket the percentage of dynamic internal links into tenths.

    Bands are upper-inclusive: (0, 10] -> 0.1, ..., (90, 100] -> 1.0, and
    no dynamic links at all -> 0.0.
    """
    if internal <= 0 or dynamic_internal <= 0:
        return 0.0
    band = -(-10 * dynamic_internal // internal)
    return min(band, 10) / 10


def to_feature_vector(stats: RawPageStats, config: Optional[FeatureConfig] = None) -> FeatureVector:
    config = config or _DEFAULT_CONFIG
    return FeatureVector(
        link_ratio=normalize_link_ratio(stats.internal_links, stats.external_links),
        buzzword=normalize_buzzword(stats.buzzword_hits, config),
        images=normalize_images(stats, config),
        animation=normalize_animation(stats.animation_count, config),
        dynamic=normalize_dynamic(stats.dynamic_internal_links, stats.internal_links),
    )


def extract_features(
    html: Markup,
    origin: PageOrigin,
    lexicon: Optional[BuzzwordLexicon] = None,
    config: Optional[FeatureConfig] = None,
) -> FeatureVector:
    return to_feature_vector(extract_stats(html, origin, lexicon, config), config)


# ---------------------------------------------------------------------------
# Feature rows: <url>\t<f1>...<f5>[\t<class name>]
# ---------------------------------------------------------------------------

def format_feature_row(url: str, vector: FeatureVector, label: Optional[ClassLabel] = None) -> str:
    fields = [url] + [f"{value:.6f}" for value in vector.as_list()]
    if label is not None:
        fields.append(label.value)
    return "\t".join(fields)


def parse_feature_row(line: str) -> FeatureRow:
    """Inverse of format_feature_row; raises ValueError on a bad row."""
    fields = line.rstrip("\r\n").split("\t")
    if len(fields) not in (6, 7):
        raise ValueError(f"expected 6 or 7 tab-separated fields, got {len(fields)}")
    try:
        values = [float(field) for field in fields[1:6]]
    except ValueError:
        raise ValueError(f"non-numeric feature value in {fields[1:6]}") from None
    label = ClassLabel.parse(fields[6]) if len(fields) == 7 else None
    return FeatureRow(url=fields[0], vector=FeatureVector.from_list(values), label=label)
