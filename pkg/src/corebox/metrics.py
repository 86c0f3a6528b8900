"""Pixel-level evaluation of predicted masks against ground truth.

Implements precision, recall, F-beta and IoU over binary pixel counts, with
per-image reports and mean/median/max/min aggregation across a test set.
Every ratio returns 0.0 on a zero denominator so empty masks never crash an
evaluation run.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyInput, InvalidBeta

METRIC_NAMES = ("iou", "f1", "f2", "precision", "recall")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass(frozen=True)
class MetricReport:
    """Per-pair metric values, all in [0, 1]."""

    precision: float
    recall: float
    f1: float
    f2: float
    iou: float
    betas: tuple[float, float] = (1.0, 2.0)

    def values(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in METRIC_NAMES}


@dataclass(frozen=True)
class SummaryStats:
    """mean/median/max/min per metric over a set of reports."""

    mean: dict[str, float]
    median: dict[str, float]
    max: dict[str, float]
    min: dict[str, float]

    def rows(self) -> list[tuple[str, dict[str, float]]]:
        return [("mean", self.mean), ("median", self.median), ("max", self.max), ("min", self.min)]


def confusion(pred: np.ndarray, truth: np.ndarray, positive: int) -> ConfusionCounts:
    """Count per-pixel agreement of two masks for one positive grey value."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise DimensionMismatch(f"pred {pred.shape} vs truth {truth.shape}")
    p = pred == positive
    t = truth == positive
    tp = int(np.count_nonzero(p & t))
    fp = int(np.count_nonzero(p & ~t))
    fn = int(np.count_nonzero(~p & t))
    tn = int(pred.size - tp - fp - fn)
    return ConfusionCounts(tp=tp, tn=tn, fp=fp, fn=fn)


def precision(c: ConfusionCounts) -> float:
    denom = c.tp + c.fp
    return c.tp / denom if denom else 0.0


def recall(c: ConfusionCounts) -> float:
    denom = c.tp + c.fn
    return c.tp / denom if denom else 0.0


def f_beta(precision_value: float, recall_value: float, beta: float) -> float:
    """(1 + beta^2) * P * R / (beta^2 * P + R), 0 on a zero denominator."""
    if beta <= 0:
        raise InvalidBeta(f"beta must be positive, got {beta}")
    b2 = beta * beta
    denom = b2 * precision_value + recall_value
    if denom == 0:
        return 0.0
    return (1.0 + b2) * precision_value * recall_value / denom


def iou(c: ConfusionCounts) -> float:
    denom = c.tp + c.fp + c.fn
    return c.tp / denom if denom else 0.0


def evaluate_pair(
    pred: np.ndarray,
    truth: np.ndarray,
    positive: int,
    betas: tuple[float, float] = (1.0, 2.0),
) -> MetricReport:
    c = confusion(pred, truth, positive)
    p = precision(c)
    r = recall(c)
    return MetricReport(
        precision=p,
        recall=r,
        f1=f_beta(p, r, betas[0]),
        f2=f_beta(p, r, betas[1]),
        iou=iou(c),
        betas=(float(betas[0]), float(betas[1])),
    )


def summarize(reports: list[MetricReport]) -> SummaryStats:
    """Aggregate per-metric mean/median/max/min; median of an even count is
    the mean of the two middle values."""
    if not reports:
        raise EmptyInput("cannot summarize zero reports")
    columns = {name: [getattr(r, name) for r in reports] for name in METRIC_NAMES}
    return SummaryStats(
        mean={k: statistics.fmean(v) for k, v in columns.items()},
        median={k: statistics.median(v) for k, v in columns.items()},
        max={k: max(v) for k, v in columns.items()},
        min={k: min(v) for k, v in columns.items()},
    )


def summary_to_text(stats: SummaryStats) -> str:
    """Aligned-column table: one row per aggregate, one column per metric."""
    header = "".rjust(8) + "".join(name.rjust(11) for name in METRIC_NAMES)
    lines = [header]
    for row_name, values in stats.rows():
        cells = "".join(f"{values[name]:11.3f}" for name in METRIC_NAMES)
        lines.append(row_name.rjust(8) + cells)
    return "\n".join(lines)


def report_to_json(per_pair: dict[str, MetricReport], stats: SummaryStats) -> str:
    doc = {
        "pairs": {stem: report.values() for stem, report in per_pair.items()},
        "summary": {row: values for row, values in stats.rows()},
    }
    return json.dumps(doc, indent=2)
