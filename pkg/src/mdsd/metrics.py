"""Evaluation metrics between reconstructed and reference intensity grids.

MAE, spatial correlation, and normalized bias are computed over the
intersection of the prediction's valid mask with the truth; Coverage is
reported separately so accuracy and completeness stay decoupled.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)


class UndefinedMetricError(ValueError):
    pass


@dataclass(frozen=True)
class MetricsReport:
    mae: float
    rho: float
    nbias: float
    coverage: float           # percent, of the prediction series
    degenerate_steps: int = 0  # time steps skipped in the correlation mean

    def __post_init__(self):
        if not 0.0 <= self.coverage <= 100.0:
            raise ValueError("coverage must be in [0, 100]")
        if self.mae < 0:
            raise ValueError("mae must be >= 0")


def _pairs(pred_series, truth_series):
    if len(pred_series) != len(truth_series) or len(pred_series) == 0:
        raise ValueError("series lengths must match and be >= 1")
    for pred, truth in zip(pred_series, truth_series):
        if pred.values.shape != truth.values.shape:
            raise ValueError("grid shapes must match")
        mask = pred.valid_mask & truth.valid_mask
        yield pred.values[mask], truth.values[mask]


def mae(pred_series, truth_series) -> float:
    """Mean over time of the spatial mean absolute error on valid pixels."""
    per_t = []
    for p, t in _pairs(pred_series, truth_series):
        if p.size:
            per_t.append(np.abs(t - p).mean())
    if not per_t:
        raise UndefinedMetricError("no valid pixels at any time step")
    return float(np.mean(per_t))


def correlation_metric(pred_series, truth_series):
    """Mean over time of the spatial Pearson correlation.

    Time steps where either field is spatially constant are skipped;
    returns (rho, skipped_count).
    """
    per_t = []
    skipped = 0
    for p, t in _pairs(pred_series, truth_series):
        if p.size < 2:
            skipped += 1
            continue
        sp, st = p.std(), t.std()
        if sp == 0.0 or st == 0.0:
            skipped += 1
            continue
        per_t.append(float(np.corrcoef(p, t)[0, 1]))
    if not per_t:
        raise UndefinedMetricError("all time steps degenerate for correlation")
    return float(np.mean(per_t)), skipped


def nbias(pred_series, truth_series) -> float:
    """Mean over time of mean(truth - pred) / mean(pred).

    Positive values indicate under-prediction.  Time steps with zero mean
    prediction are excluded with a warning.
    """
    per_t = []
    for i, (p, t) in enumerate(_pairs(pred_series, truth_series)):
        if p.size == 0:
            continue
        mean_pred = p.mean()
        if mean_pred == 0.0:
            log.warning("nbias: zero mean prediction at step %d, excluded", i)
            continue
        per_t.append((t.mean() - mean_pred) / mean_pred)
    if not per_t:
        raise UndefinedMetricError("no usable time steps for nbias")
    return float(np.mean(per_t))


def coverage(grid) -> float:
    """Percentage of valid pixels in one grid."""
    total = grid.valid_mask.size
    if total == 0:
        return 0.0
    return 100.0 * float(grid.valid_mask.sum()) / total


def series_coverage(pred_series) -> float:
    return float(np.mean([coverage(g) for g in pred_series]))


def evaluate(pred_series, truth_series) -> MetricsReport:
    rho, skipped = correlation_metric(pred_series, truth_series)
    return MetricsReport(
        mae=mae(pred_series, truth_series),
        rho=rho,
        nbias=nbias(pred_series, truth_series),
        coverage=series_coverage(pred_series),
        degenerate_steps=skipped,
    )


METRICS_CSV_COLUMNS = [
    "season", "method", "ndf", "seed",
    "mae", "rho", "nbias", "coverage", "clamp_count", "detect_latency",
]


def append_metrics_row(path, row: dict) -> None:
    """Append one run's metrics to the results CSV, writing a header first."""
    try:
        with open(path) as fh:
            has_header = bool(fh.readline().strip())
    except FileNotFoundError:
        has_header = False
    with open(path, "a", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=METRICS_CSV_COLUMNS)
        if not has_header:
            writer.writeheader()
        writer.writerow({k: row[k] for k in METRICS_CSV_COLUMNS})
