import logging
from typing import List, Sequence, Tuple

import numpy as np
from sklearn.metrics import confusion_matrix

from .errors import EmptyDatasetError, ReportFormatError
from .mlp import Network, predict
from .models import ClassLabel, EvalReport, FeatureVector

logger = logging.getLogger(__name__)

REPORT_FORMATS = ("table", "tsv", "json")


def evaluate(net: Network, data: Sequence[Tuple[FeatureVector, ClassLabel]], set_name: str = "test") -> EvalReport:
    """
    Classify every sample and tally the results against the true labels.

    Args:
        net: Trained network.
        data: (feature vector, true class) pairs.
        set_name: Label for the report, e.g. "known" or "unknown".
    """
    if not data:
        raise EmptyDatasetError("cannot evaluate an empty set")
    truths = [truth.index for _, truth in data]
    predictions = [predict(net, vector)[0].index for vector, _ in data]
    confusion = confusion_matrix(truths, predictions, labels=np.arange(len(ClassLabel)))
    report = EvalReport.from_confusion(confusion.tolist(), set_name=set_name)
    logger.info("Evaluated %d samples on '%s': accuracy %.4f", len(data), set_name, report.accuracy)
    return report


def _render_table(report: EvalReport) -> str:
    rows = [(label.display_name, tally.right, tally.wrong) for label, tally in report.per_class.items()]
    rows.append(("Total", report.total_right, report.total_wrong))
    header = ("Types of pages", "Right", "Wrong")

    # Number columns fit the counts, not the header words.
    name_width = max(len(name) for name, _, _ in rows + [header])
    right_width = max(len(str(r)) for _, r, _ in rows)
    wrong_width = max(len(str(w)) for _, _, w in rows)

    def line(name, right, wrong) -> str:
        return f"{name:<{name_width}}  {str(right):>{right_width}}  {str(wrong):>{wrong_width}}"

    lines = [f"Results ({report.set_name})", f"{header[0]:<{name_width}}  {header[1]}  {header[2]}"]
    lines += [line(*row) for row in rows]
    lines.append(f"Accuracy: {report.accuracy:.4f}")
    return "\n".join(lines) + "\n"


def _render_tsv(report: EvalReport) -> str:
    lines = ["class\tright\twrong"]
    lines += [f"{label.value}\t{tally.right}\t{tally.wrong}" for label, tally in report.per_class.items()]
    lines.append(f"TOTAL\t{report.total_right}\t{report.total_wrong}")
    lines.append(f"# set={report.set_name}")
    for label in ClassLabel:
        counts = "\t".join(str(c) for c in report.confusion[label.index])
        lines.append(f"# confusion\t{label.value}\t{counts}")
    lines.append(f"# accuracy={report.accuracy:.4f}")
    return "\n".join(lines) + "\n"


def render_report(report: EvalReport, format: str = "table") -> str:
    """
    Render a report as ``table`` (aligned text with a Total row), ``tsv``
    (see parse_report_tsv) or ``json``.
    """
    if format == "table":
        return _render_table(report)
    if format == "tsv":
        return _render_tsv(report)
    if format == "json":
        return report.model_dump_json(indent=2) + "\n"
    raise ValueError(f"unknown report format '{format}' (choose from {', '.join(REPORT_FORMATS)})")


def parse_report_tsv(text: str) -> EvalReport:
    """Rebuild an EvalReport from its tsv rendering; the per-class rows are cross-checked."""
    set_name = "test"
    confusion: dict = {}
    tallies: dict = {}
    total = None
    lines: List[str] = [line for line in text.splitlines() if line.strip()]
    if not lines or lines[0] != "class\tright\twrong":
        raise ReportFormatError("missing 'class\\tright\\twrong' header")

    try:
        for line in lines[1:]:
            fields = line.split("\t")
            if line.startswith("# set="):
                set_name = line[len("# set="):]
            elif fields[0] == "# confusion":
                confusion[ClassLabel.parse(fields[1])] = tuple(int(c) for c in fields[2:])
            elif line.startswith("# accuracy="):
                continue
            elif fields[0] == "TOTAL":
                total = (int(fields[1]), int(fields[2]))
            else:
                tallies[ClassLabel.parse(fields[0])] = (int(fields[1]), int(fields[2]))
    except (IndexError, ValueError) as e:
        raise ReportFormatError(f"malformed report line: {e}") from None

    if set(confusion) != set(ClassLabel):
        raise ReportFormatError("report is missing confusion rows")
    try:
        report = EvalReport.from_confusion([confusion[label] for label in ClassLabel], set_name=set_name)
    except ValueError as e:
        raise ReportFormatError(f"invalid confusion matrix: {e}") from None

    for label, (right, wrong) in tallies.items():
        tally = report.per_class[label]
        if (tally.right, tally.wrong) != (right, wrong):
            raise ReportFormatError(f"{label.value} row {right}/{wrong} disagrees with the confusion matrix")
    if total is not None and total != (report.total_right, report.total_wrong):
        raise ReportFormatError("TOTAL row disagrees with the confusion matrix")
    return report
