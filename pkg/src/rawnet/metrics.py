"""Evaluation statistics and table-shaped report files.

Accuracy is correct / total.  Precision, recall and f1 are computed per
class from the confusion matrix; the headline f1 is the support-weighted
mean, which behaves sensibly on the uneven class distributions typical of
botnet captures.  Zero-division conventions are explicit: a class nobody
predicted gets precision 0, and f1 is 0 when precision + recall is 0.

Report files come in two flavors: an aligned human-readable grid
(representation x header category, accuracy and f1 columns) and a
machine-readable CSV with the same cells.  Published full-scale IoT-23
results can be attached as reference columns for side-by-side reading.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .encoder import HeaderCategory
from .splitter import Representation


class LengthMismatchError(ValueError):
    """Prediction and label sequences differ in length."""


class EmptyMatrixError(ValueError):
    """Metrics requested for a confusion matrix with no samples."""


class IncompleteGridWarning(UserWarning):
    """A report grid is missing cells; the report is emitted anyway."""


# Published full-scale IoT-23 results, (accuracy, f1) per grid cell, kept
# for the optional comparison column in reports.  Desk-scale runs are not
# expected to reproduce them; they are reference points.
REFERENCE_BINARY_IOT23 = {
    ("ExpS", "All headers"): (1.00, 0.97),
    ("ExpS", "Only Eth"): (1.00, 0.96),
    ("ExpS", "Without Eth"): (1.00, 0.96),
    ("ExpS", "No headers"): (1.00, 0.94),
    ("ExpF", "All headers"): (1.00, 0.97),
    ("ExpF", "Only Eth"): (1.00, 0.93),
    ("ExpF", "Without Eth"): (0.97, 0.96),
    ("ExpF", "No headers"): (0.99, 1.00),
    ("ExpP", "All headers"): (1.00, 0.96),
    ("ExpP", "Only Eth"): (0.98, 0.96),
    ("ExpP", "Without Eth"): (0.98, 0.97),
    ("ExpP", "No headers"): (0.99, 0.95),
}

REFERENCE_MULTILABEL_IOT23 = {
    ("ExpS", "All headers"): (0.99, 0.96),
    ("ExpS", "Only Eth"): (0.94, 0.93),
    ("ExpS", "Without Eth"): (0.84, 0.92),
    ("ExpS", "No headers"): (0.96, 0.92),
    ("ExpF", "All headers"): (0.93, 0.92),
    ("ExpF", "Only Eth"): (0.72, 0.85),
    ("ExpF", "Without Eth"): (0.79, 0.91),
    ("ExpF", "No headers"): (0.91, 0.90),
    ("ExpP", "All headers"): (0.97, 0.93),
    ("ExpP", "Only Eth"): (0.98, 0.93),
    ("ExpP", "Without Eth"): (0.74, 0.80),
    ("ExpP", "No headers"): (0.98, 0.93),
}

# Grid order used by every report: table rows group by representation.
GRID_REPRESENTATIONS = (Representation.SESSION, Representation.FLOW,
                        Representation.PACKET)
GRID_CATEGORIES = (HeaderCategory.ALL_HEADERS, HeaderCategory.ONLY_ETH,
                   HeaderCategory.WITHOUT_ETH, HeaderCategory.NO_HEADERS)


def confusion(predictions, labels, n_classes: int | None = None) -> np.ndarray:
    """Counts matrix, rows = true class, columns = predicted class."""
    predictions = np.asarray(predictions, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if predictions.shape != labels.shape:
        raise LengthMismatchError(
            f"{predictions.shape[0]} predictions vs {labels.shape[0]} labels")
    if n_classes is None:
        n_classes = int(max(predictions.max(initial=0),
                            labels.max(initial=0))) + 1
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (labels, predictions), 1)
    return cm


@dataclass
class MetricsReport:
    accuracy: float
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    weighted_f1: float
    support: np.ndarray

    @property
    def n_samples(self) -> int:
        return int(self.support.sum())


def metrics(cm: np.ndarray) -> MetricsReport:
    """Accuracy plus per-class precision/recall/f1 and the weighted f1."""
    cm = np.asarray(cm)
    total = cm.sum()
    if total == 0:
        raise EmptyMatrixError("confusion matrix has no samples")
    support = cm.sum(axis=1)
    predicted = cm.sum(axis=0)
    tp = np.diag(cm).astype(np.float64)
    precision = np.divide(tp, predicted, out=np.zeros_like(tp),
                          where=predicted > 0)
    recall = np.divide(tp, support, out=np.zeros_like(tp), where=support > 0)
    pr_sum = precision + recall
    f1 = np.divide(2 * precision * recall, pr_sum, out=np.zeros_like(tp),
                   where=pr_sum > 0)
    weighted_f1 = float((f1 * support).sum() / total)
    return MetricsReport(float(tp.sum() / total), precision, recall, f1,
                         weighted_f1, support)


def write_metrics_report(report: MetricsReport, classes: list[str],
                         path: str, header_lines=()) -> None:
    """Per-class breakdown for a single experiment cell."""
    with open(path, "w") as fp:
        for line in header_lines:
            fp.write(f"# {line}\n")
        fp.write(f"accuracy={report.accuracy!r}\n")
        fp.write(f"weighted_f1={report.weighted_f1!r}\n")
        fp.write("class,precision,recall,f1,support\n")
        for i, name in enumerate(classes):
            fp.write(f"{name},{report.precision[i]!r},{report.recall[i]!r},"
                     f"{report.f1[i]!r},{int(report.support[i])}\n")


def emit_report(results, path: str, reference: dict | None = None,
                header_lines=()) -> None:
    """Write the representation x category grid as text + CSV.

    results: iterable of (Representation, HeaderCategory, MetricsReport).
    Missing cells warn (IncompleteGridWarning) but the files are still
    written.  `reference` maps ("ExpS", "All headers")-style keys to
    (accuracy, f1) pairs and adds two comparison columns.
    """
    cells = {(rep, cat): rpt for rep, cat, rpt in results}
    missing = [(rep.display, cat.display)
               for rep in GRID_REPRESENTATIONS for cat in GRID_CATEGORIES
               if (rep, cat) not in cells]
    if missing:
        warnings.warn(f"report grid missing {len(missing)} cells: "
                      f"{missing}", IncompleteGridWarning)

    columns = ["representation", "header", "accuracy", "f1"]
    if reference:
        columns += ["ref_accuracy", "ref_f1"]
    rows = []
    for rep in GRID_REPRESENTATIONS:
        for cat in GRID_CATEGORIES:
            rpt = cells.get((rep, cat))
            if rpt is None:
                continue
            row = [rep.display, cat.display,
                   f"{rpt.accuracy:.4f}", f"{rpt.weighted_f1:.4f}"]
            if reference:
                ref = reference.get((rep.display, cat.display))
                row += [f"{ref[0]:.2f}", f"{ref[1]:.2f}"] if ref else ["", ""]
            rows.append(row)

    widths = [max(len(col), *(len(r[i]) for r in rows)) if rows else len(col)
              for i, col in enumerate(columns)]
    with open(path, "w") as fp:
        for line in header_lines:
            fp.write(f"# {line}\n")
        fp.write("  ".join(c.ljust(w) for c, w in zip(columns, widths)).rstrip()
                 + "\n")
        for row in rows:
            fp.write("  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip()
                     + "\n")
    csv_path = path + ".csv" if not path.endswith(".txt") \
        else path[:-4] + ".csv"
    with open(csv_path, "w") as fp:
        fp.write(",".join(columns) + "\n")
        for row in rows:
            fp.write(",".join(row) + "\n")
