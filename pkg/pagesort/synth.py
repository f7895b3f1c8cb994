"""
Seeded synthetic corpus.

Each class has a prototype feature vector (``data/prototypes.tsv``).
Samples are prototype plus uniform noise; every sample is also rendered as
an HTML page whose extracted features land on the sample's vector, up to
the rounding forced by integer counts. Animation values too small for a
single animation to represent are snapped to 0 or to that first level.
"""
import logging
import math
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict

from .config import FeatureConfig
from .corpus import load_prototypes, write_features, write_manifest
from .models import DYNAMIC_LEVELS, ClassLabel, FeatureRow, FeatureVector, LabeledPage, PageOrigin

logger = logging.getLogger(__name__)

INTERNAL_LINKS = 20
_MAX_RATIO = 19  # external links per internal link at link_ratio -> 1
_MAX_COUNT = 400

# Each word is listed under exactly one class.
SIGNATURE_WORDS = {
    ClassLabel.BUSINESS_ECONOMY: "commerce",
    ClassLabel.EDUCATION: "student",
    ClassLabel.GOVERNMENT: "ministry",
    ClassLabel.NEWS_MEDIA: "news",
    ClassLabel.SPORTS: "sports",
    ClassLabel.JOB_SEARCH: "vacancy",
    ClassLabel.ENTERTAINMENT: "music",
    ClassLabel.SCIENCE: "science",
}


class SyntheticPage(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: str
    url: str
    label: ClassLabel
    vector: FeatureVector
    html: str

    @property
    def sample(self) -> Tuple[FeatureVector, ClassLabel]:
        return self.vector, self.label


def _dynamic_level(value: float) -> float:
    return DYNAMIC_LEVELS[min(10, max(0, math.floor(value * 10 + 0.5)))]


def _animation_level(value: float, k: float) -> float:
    """Snap values below the first reachable level 1/(1+k) to 0 or that level."""
    first = 1 / (1 + k)
    if value >= first:
        return value
    return first if value >= first / 2 else 0.0


def _inverse_saturation(value: float, k: float, cap: int) -> int:
    """Integer count n whose n / (n + k) is nearest to value."""
    if value <= 0:
        return 0
    if value >= 1:
        return cap
    low = min(math.floor(value * k / (1 - value)), cap)
    high = min(low + 1, cap)
    return min((low, high), key=lambda n: abs(n / (n + k) - value))


def render_page(vector: FeatureVector, label: ClassLabel, config: Optional[FeatureConfig] = None) -> str:
    """Build a small home page whose counts reproduce ``vector``."""
    config = config or FeatureConfig()
    external = _inverse_saturation(vector.link_ratio, INTERNAL_LINKS, INTERNAL_LINKS * _MAX_RATIO)
    dynamic = round(vector.dynamic * INTERNAL_LINKS)
    buzzwords = _inverse_saturation(vector.buzzword, config.buzzword_saturation, _MAX_COUNT)
    images = _inverse_saturation(vector.images, config.image_saturation, _MAX_COUNT)
    animations = _inverse_saturation(vector.animation, config.animation_saturation, _MAX_COUNT)

    links = [
        f'<li><a href="/item-{i}.php">page</a></li>' if i < dynamic else f'<li><a href="/section-{i}.html">page</a></li>'
        for i in range(INTERNAL_LINKS)
    ]
    links += [f'<li><a href="http://www.partner-{i}.org/">page</a></li>' for i in range(external)]
    pictures = [f'<img src="/images/photo-{i}.jpg" width="120" height="80" alt="">' for i in range(images)]
    motion = []
    for i in range(animations):
        if i % 3 == 0:
            motion.append(f'<embed src="/media/anim-{i}.swf" width="200" height="100">')
        elif i % 3 == 1:
            motion.append(f'<object data="/media/anim-{i}.swf" type="application/x-shockwave-flash"></object>')
        else:
            motion.append("<marquee>lorem ipsum</marquee>")

    words = " ".join([SIGNATURE_WORDS[label]] * buzzwords)
    lines = [
        "<!DOCTYPE html>",
        "<html>",
        "<head>",
        "<title>Synthetic home page</title>",
        "<style>body { font-family: serif; }</style>",
        '<script>var decoy = "news sports music science";</script>',
        "</head>",
        "<body>",
        "<h1>Home</h1>",
        "<p>lorem ipsum dolor sit amet</p>",
        f"<p>{words}</p>",
        "<ul>",
        *links,
        "</ul>",
        "<div>",
        *pictures,
        "</div>",
        "<div>",
        *motion,
        "</div>",
        "</body>",
        "</html>",
    ]
    return "\n".join(lines) + "\n"


def synth_generate(
    per_class: int,
    noise: float,
    seed: int,
    out_dir: Optional[Union[str, Path]] = None,
    prototypes: Optional[Dict[ClassLabel, FeatureVector]] = None,
    config: Optional[FeatureConfig] = None,
) -> List[SyntheticPage]:
    """
    Generate ``per_class`` noisy samples of every class prototype.

    Args:
        per_class: Samples per class (>= 1).
        noise: Half-width of the uniform noise added to each feature, in [0, 1).
        seed: Generator seed; equal arguments give byte-identical output.
        out_dir: When given, write manifest.tsv, pages/*.html and features.tsv there.
        prototypes: Class prototype vectors; the bundled table by default.
        config: Feature config whose saturation constants the pages target.

    Returns:
        The generated pages in class order.
    """
    if per_class < 1:
        raise ValueError("per_class must be at least 1")
    if not 0 <= noise < 1:
        raise ValueError("noise must be in [0, 1)")
    if prototypes is None:
        prototypes = load_prototypes()

    animation_k = (config or FeatureConfig()).animation_saturation
    rng = np.random.default_rng(seed)
    pages: List[SyntheticPage] = []
    for label in ClassLabel:
        prototype = np.array(prototypes[label].as_list())
        slug = label.value.lower()
        for i in range(1, per_class + 1):
            values = np.clip(prototype + rng.uniform(-noise, noise, size=prototype.shape), 0.0, 1.0)
            values[3] = _animation_level(values[3], animation_k)
            values[-1] = _dynamic_level(values[-1])
            vector = FeatureVector.from_list(values.tolist())
            page_id = f"{slug}-{i:04d}"
            pages.append(
                SyntheticPage(
                    id=page_id,
                    url=f"http://www.{slug}-{i:04d}.com/",
                    label=label,
                    vector=vector,
                    html=render_page(vector, label, config),
                )
            )

    if out_dir is not None:
        write_synthetic_corpus(pages, out_dir)
    return pages


def write_synthetic_corpus(pages: List[SyntheticPage], out_dir: Union[str, Path]) -> Path:
    out_dir = Path(out_dir)
    page_dir = out_dir / "pages"
    page_dir.mkdir(parents=True, exist_ok=True)

    labeled = []
    for page in pages:
        html_path = page_dir / f"{page.id}.html"
        html_path.write_bytes(page.html.encode("utf-8"))
        labeled.append(
            LabeledPage(id=page.id, origin=PageOrigin.from_url(page.url), html_path=html_path, label=page.label)
        )
    write_manifest(labeled, out_dir / "manifest.tsv")
    write_features([FeatureRow(url=p.url, vector=p.vector, label=p.label) for p in pages], out_dir / "features.tsv")
    logger.info("Wrote %d synthetic pages to %s", len(pages), out_dir)
    return out_dir
