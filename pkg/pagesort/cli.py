import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from pydantic import ValidationError

from . import __version__
from .config import DEFAULT_FEATURE_CONFIG_PATH, DEFAULT_LEXICON_PATH, FeatureConfig, GlobalConfig, settings
from .corpus import (
    extract_pages,
    labeled_samples,
    load_manifest,
    load_model,
    load_prototypes,
    read_features,
    save_model,
    split,
    write_features,
    write_manifest,
)
from .errors import PagesortError
from .evaluation import REPORT_FORMATS, evaluate, render_report
from .html_features import extract_features
from .ingest import fetch_manifest, fetch_page, read_url_list
from .lexicon import load_lexicon
from .mlp import init_network, predict, train
from .models import BuzzwordLexicon, FeatureRow, FeatureVector, PageOrigin, SplitSpec, TrainConfig
from .synth import synth_generate

logger = logging.getLogger(__name__)

DEFAULT_FILE_ORIGIN = "http://localhost/"


def configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


class Context:
    """Resolved common options handed to every command."""

    def __init__(self, config: GlobalConfig):
        self.config = config
        self._lexicon: Optional[BuzzwordLexicon] = None
        self._features: Optional[FeatureConfig] = None

    @property
    def seed(self) -> int:
        return self.config.seed

    @property
    def lexicon(self) -> BuzzwordLexicon:
        if self._lexicon is None:
            self._lexicon = load_lexicon(self.config.lexicon_path)
        return self._lexicon

    @property
    def features(self) -> FeatureConfig:
        if self._features is None:
            self._features = FeatureConfig.load(self.config.feature_config_path)
        return self._features


def _is_manifest(path: Path) -> bool:
    """Manifests have 4 columns per row, feature files 6 or 7."""
    try:
        with open(path, encoding="utf-8") as f:
            for line in f:
                if line.strip() and not line.startswith("#"):
                    return len(line.rstrip("\r\n").split("\t")) == 4
    except OSError as e:
        raise PagesortError(f"Failed to read {path}: {e}") from e
    return False


def _load_rows(path: Path, ctx: Context) -> Tuple[List[FeatureRow], List[Tuple[str, str]]]:
    if _is_manifest(path):
        return extract_pages(load_manifest(path, check_files=False), ctx.lexicon, ctx.features)
    return read_features(path), []


def _report_failures(failures: Sequence[Tuple[str, str]]) -> int:
    for page_id, message in failures:
        logger.error("page %s: %s", page_id, message)
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_extract(args: argparse.Namespace, ctx: Context) -> int:
    pages = load_manifest(args.manifest, check_files=False)
    rows, failures = extract_pages(pages, ctx.lexicon, ctx.features)
    write_features(rows, args.out)
    print(f"Wrote {len(rows)} feature rows to {args.out}")
    return _report_failures(failures)


def cmd_train(args: argparse.Namespace, ctx: Context) -> int:
    samples = labeled_samples(read_features(args.features))
    config = TrainConfig(
        learning_rate=args.learning_rate,
        epochs=args.epochs,
        seed=ctx.seed,
        target_mse=args.target_mse,
        init_scale=args.init_scale,
    )
    net, report = train(init_network(config), samples, config)
    save_model(net, args.model_out)
    print(f"epochs_run={report.epochs_run}\tfinal_mse={report.final_mse:.6f}\tmodel={args.model_out}")
    return 0


def _load_target(args: argparse.Namespace) -> Tuple[bytes, PageOrigin]:
    target = args.target
    if target.startswith(("http://", "https://")):
        record = fetch_page(target, args.cache_dir, refresh=args.refresh)
        return record.body_path.read_bytes(), PageOrigin.from_url(record.final_url)
    try:
        html = Path(target).read_bytes()
    except OSError as e:
        raise PagesortError(f"Failed to read {target}: {e.strerror or e}") from e
    return html, PageOrigin.from_url(args.origin)


def cmd_classify(args: argparse.Namespace, ctx: Context) -> int:
    net = load_model(args.model)
    html, origin = _load_target(args)
    vector: FeatureVector = extract_features(html, origin, ctx.lexicon, ctx.features)
    label, raw = predict(net, vector)
    print(f"{label.value}\t{raw[0]:.6f} {raw[1]:.6f} {raw[2]:.6f}")
    print("features\t" + "\t".join(f"{value:.6f}" for value in vector.as_list()))
    return 0


def cmd_evaluate(args: argparse.Namespace, ctx: Context) -> int:
    net = load_model(args.model)
    rows, failures = _load_rows(args.input, ctx)
    report = evaluate(net, labeled_samples(rows), set_name=args.set_name)
    sys.stdout.write(render_report(report, args.format))
    return _report_failures(failures)


def cmd_synth(args: argparse.Namespace, ctx: Context) -> int:
    pages = synth_generate(
        args.per_class,
        args.noise,
        ctx.seed,
        out_dir=args.out_dir,
        prototypes=load_prototypes(args.prototypes),
        config=ctx.features,
    )
    print(f"Wrote {len(pages)} synthetic pages to {args.out_dir}")
    return 0


def cmd_split(args: argparse.Namespace, ctx: Context) -> int:
    spec = SplitSpec(train_fraction=args.train_fraction, seed=ctx.seed, stratified=not args.no_stratify)
    if _is_manifest(args.input):
        train_part, test_part = split(load_manifest(args.input), spec)
        write_manifest(train_part, args.train_out)
        write_manifest(test_part, args.test_out)
    else:
        train_part, test_part = split(read_features(args.input), spec)
        write_features(train_part, args.train_out)
        write_features(test_part, args.test_out)
    print(f"train={len(train_part)}\ttest={len(test_part)}")
    return 0


def cmd_fetch(args: argparse.Namespace, ctx: Context) -> int:
    entries = read_url_list(args.urls)
    manifest = fetch_manifest(
        [url for url, _ in entries],
        [label for _, label in entries],
        cache_dir=args.cache_dir,
        concurrency=args.concurrency,
        out_dir=args.out_dir,
        timeout=args.timeout,
        refresh=args.refresh,
    )
    fetched = len(load_manifest(manifest))
    print(f"Fetched {fetched} of {len(entries)} pages; manifest {manifest}")
    if fetched < len(entries):
        logger.error("%d pages failed, see %s", len(entries) - fetched, Path(args.out_dir) / "failures.tsv")
        return 1
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=settings.seed,
                        help="seed for weight init, shuffling, splitting and synthesis (default: %(default)s)")
    common.add_argument("--lexicon", type=Path, default=DEFAULT_LEXICON_PATH,
                        help="buzzword lexicon file (default: bundled)")
    common.add_argument("--feature-config", type=Path, default=DEFAULT_FEATURE_CONFIG_PATH,
                        help="feature config file (default: bundled)")
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v for info, -vv for debug logging")

    parser = argparse.ArgumentParser(
        prog="pagesort",
        description="Categorize web pages into eight classes with a 5-5-3 backpropagation network.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = commands.add_parser("extract", parents=[common], help="extract features for every page in a manifest")
    p.add_argument("--manifest", type=Path, required=True, help="page manifest (id, url, html path, class)")
    p.add_argument("--out", type=Path, required=True, help="features file to write")
    p.set_defaults(handler=cmd_extract)

    p = commands.add_parser("train", parents=[common], help="train a network on a features file")
    p.add_argument("--features", type=Path, required=True, help="labeled features file")
    p.add_argument("--model-out", type=Path, required=True, help="model file to write")
    p.add_argument("--learning-rate", type=float, default=0.5, help="default: %(default)s")
    p.add_argument("--epochs", type=int, default=2000, help="maximum epochs (default: %(default)s)")
    p.add_argument("--target-mse", type=float, default=0.01, help="early-stop epoch mse (default: %(default)s)")
    p.add_argument("--init-scale", type=float, default=0.5, help="uniform init half-width (default: %(default)s)")
    p.set_defaults(handler=cmd_train)

    p = commands.add_parser("classify", parents=[common], help="classify one page (url or html file)")
    p.add_argument("--model", type=Path, required=True, help="model file")
    p.add_argument("target", help="http(s) url or path to an html file")
    p.add_argument("--origin", default=DEFAULT_FILE_ORIGIN,
                   help="page url used to resolve links of an html file (default: %(default)s)")
    p.add_argument("--cache-dir", type=Path, default=settings.cache_dir,
                   help="fetch cache (default: $PAGESORT_CACHE or %(default)s)")
    p.add_argument("--refresh", action="store_true", help="fetch again even when cached")
    p.set_defaults(handler=cmd_classify)

    p = commands.add_parser("evaluate", parents=[common], help="score a model on a manifest or features file")
    p.add_argument("--model", type=Path, required=True, help="model file")
    p.add_argument("input", type=Path, help="manifest or labeled features file")
    p.add_argument("--format", choices=REPORT_FORMATS, default="table", help="default: %(default)s")
    p.add_argument("--set-name", default="test", help="label printed with the report (default: %(default)s)")
    p.set_defaults(handler=cmd_evaluate)

    p = commands.add_parser("synth", parents=[common], help="generate a synthetic corpus")
    p.add_argument("--per-class", type=int, default=25, help="pages per class (default: %(default)s)")
    p.add_argument("--noise", type=float, default=0.05, help="uniform noise half-width (default: %(default)s)")
    p.add_argument("--out-dir", type=Path, required=True, help="corpus directory to write")
    p.add_argument("--prototypes", type=Path, default=None, help="prototype table (default: bundled)")
    p.set_defaults(handler=cmd_synth)

    p = commands.add_parser("split", parents=[common], help="split a manifest or features file into train/test")
    p.add_argument("input", type=Path, help="manifest or labeled features file")
    p.add_argument("--train-out", type=Path, required=True)
    p.add_argument("--test-out", type=Path, required=True)
    p.add_argument("--train-fraction", type=float, default=0.4, help="default: %(default)s")
    p.add_argument("--no-stratify", action="store_true", help="shuffle all pages together instead of per class")
    p.set_defaults(handler=cmd_split)

    p = commands.add_parser("fetch", parents=[common], help="fetch a url list into a corpus manifest")
    p.add_argument("--urls", type=Path, required=True, help="file of '<url>\\t<class name>' lines")
    p.add_argument("--out-dir", type=Path, required=True, help="directory for manifest.tsv and failures.tsv")
    p.add_argument("--cache-dir", type=Path, default=settings.cache_dir,
                   help="fetch cache (default: $PAGESORT_CACHE or %(default)s)")
    p.add_argument("--concurrency", type=int, default=settings.concurrency, help="default: %(default)s")
    p.add_argument("--timeout", type=float, default=settings.timeout, help="seconds (default: %(default)s)")
    p.add_argument("--refresh", action="store_true", help="fetch again even when cached")
    p.set_defaults(handler=cmd_fetch)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)

    try:
        ctx = Context(
            GlobalConfig(
                lexicon_path=args.lexicon,
                feature_config_path=args.feature_config,
                seed=args.seed,
                verbosity=args.verbose,
            )
        )
        return args.handler(args, ctx)
    except ValidationError as e:
        logger.error("invalid option: %s", e)
        return 1
    except (PagesortError, ValueError) as e:
        logger.error("%s", e)
        return 1


if __name__ == "__main__":
    sys.exit(main())
