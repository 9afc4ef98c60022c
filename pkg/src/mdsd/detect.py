"""Multi-link correlation-based dust storm detection.

A storm is declared when the mean pairwise correlation of signal-level
changes across links exceeds a threshold while the mean change itself is
significantly negative (signal drop).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from itertools import combinations

import numpy as np


class InsufficientLinksError(ValueError):
    pass


@dataclass(frozen=True)
class DetectionConfig:
    rho_threshold: float = 0.7
    alpha: float = 1.0        # dB/km drop magnitude threshold
    window: int = 24          # samples

    def __post_init__(self):
        if not 0.0 < self.rho_threshold < 1.0:
            raise ValueError("rho_threshold must be in (0, 1)")
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if self.window < 3:
            raise ValueError("window must be >= 3")


@dataclass(frozen=True)
class DetectionResult:
    detected: bool
    rho_bar: float
    delta_bar: float
    n_links_used: int
    n_pairs: int


def pairwise_correlation(x, y):
    """Pearson correlation of two windows; None when either is degenerate."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("windows must be equal-length 1-D arrays")
    if len(x) < 3:
        raise ValueError("window too short for correlation")
    xm = x - x.mean()
    ym = y - y.mean()
    sx = np.sqrt((xm**2).sum())
    sy = np.sqrt((ym**2).sum())
    if sx == 0.0 or sy == 0.0:
        return None
    return float(np.clip((xm * ym).sum() / (sx * sy), -1.0, 1.0))


def detect_storm(windows, cfg: DetectionConfig = DetectionConfig()) -> DetectionResult:
    """Evaluate the detection criterion on per-link signal-change windows.

    ``windows`` is a sequence of equal-length 1-D arrays of signal-level
    change (dB; storm onset drives them negative).  Constant windows are
    excluded from the correlation average.
    """
    arrays = [np.asarray(w, dtype=float) for w in windows]
    usable = [w for w in arrays if np.std(w) > 0]
    if len(usable) < 2:
        raise InsufficientLinksError(
            f"need >= 2 nondegenerate links, got {len(usable)}"
        )
    rhos = []
    for a, b in combinations(usable, 2):
        rho = pairwise_correlation(a, b)
        if rho is not None:
            rhos.append(rho)
    rho_bar = float(np.mean(rhos))
    delta_bar = float(np.mean([w.mean() for w in arrays]))
    detected = rho_bar > cfg.rho_threshold and delta_bar < -cfg.alpha
    return DetectionResult(
        detected=detected,
        rho_bar=rho_bar,
        delta_bar=delta_bar,
        n_links_used=len(usable),
        n_pairs=len(rhos),
    )


def detect_series(delta_series, cfg: DetectionConfig = DetectionConfig()):
    """Sliding-window detection with stride 1 over per-link change series.

    Returns a list of (window_start, DetectionResult); windows where fewer
    than two links are usable are skipped.
    """
    arrays = [np.asarray(s, dtype=float) for s in delta_series]
    if not arrays:
        raise InsufficientLinksError("no links supplied")
    n = min(len(a) for a in arrays)
    results = []
    for start in range(0, n - cfg.window + 1):
        windows = [a[start : start + cfg.window] for a in arrays]
        try:
            results.append((start, detect_storm(windows, cfg)))
        except InsufficientLinksError:
            continue
    return results


def onset_index(results):
    """First window start satisfying the criterion, or None."""
    for start, res in results:
        if res.detected:
            return start
    return None


def write_detection_log(path, results) -> None:
    """CSV log: window start, rho_bar, mean signal change, decision."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["window_start", "rho_bar", "delta_bar", "detected"])
        for start, res in results:
            writer.writerow([start, f"{res.rho_bar:.12g}", f"{res.delta_bar:.12g}", int(res.detected)])
