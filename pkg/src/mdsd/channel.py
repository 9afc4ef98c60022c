"""Link attenuation synthesis, clear-sky baselines, and dust isolation.

Per-km series carry dust plus molecular attenuation with additive Gaussian
measurement noise; free-space path loss is constant per link and reported
separately so baseline subtraction cancels it by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import dust as dustmod
from .constants import SPEED_OF_LIGHT
from .spectra import absorption_coefficient, absorption_db_per_km

HOURS_PER_SOL = 24
DEFAULT_PATH_SAMPLES = 16
DEFAULT_NOISE_SIGMA = 0.05  # dB/km


class BaselineError(ValueError):
    """An hour-of-sol bin has no clear samples; carries the hour."""

    def __init__(self, hour: int):
        super().__init__(f"no clear samples for hour-of-sol {hour}")
        self.hour = hour


@dataclass
class AttenuationSeries:
    """Per-km attenuation samples for one link at hourly sol times."""

    link_id: int
    times: np.ndarray        # sol-hour indices, strictly increasing
    values: np.ndarray       # dB/km
    free_space_db: float     # constant per link, reported separately
    flags: np.ndarray = None  # optional ground-truth storm annotation

    def __post_init__(self):
        self.times = np.asarray(self.times)
        self.values = np.asarray(self.values, dtype=float)
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("attenuation values must be finite")


@dataclass
class Baseline:
    """Hour-of-sol median clear-sky attenuation, dB/km."""

    per_hour: np.ndarray     # shape (24,)

    def __post_init__(self):
        self.per_hour = np.asarray(self.per_hour, dtype=float)
        if self.per_hour.shape != (HOURS_PER_SOL,):
            raise ValueError("baseline must have 24 hourly entries")
        if not np.all(np.isfinite(self.per_hour)) or np.any(self.per_hour < 0):
            raise ValueError("baseline entries must be finite and >= 0")

    def at(self, times) -> np.ndarray:
        return self.per_hour[np.asarray(times) % HOURS_PER_SOL]


def free_space_path_loss(f: float, d_km: float) -> float:
    """Friis free-space loss in dB for distance in km."""
    if f <= 0 or d_km <= 0:
        raise ValueError("frequency and distance must be > 0")
    return 20.0 * math.log10(4.0 * math.pi * d_km * 1e3 * f / SPEED_OF_LIGHT)


def link_path_points(link, n_points: int = DEFAULT_PATH_SAMPLES) -> np.ndarray:
    """Equally spaced sampling points along the link, shape (n_points, 2).

    ``n_points=1`` degenerates to the midpoint.
    """
    a = np.asarray(link.endpoint_a, dtype=float)
    b = np.asarray(link.endpoint_b, dtype=float)
    if n_points == 1:
        return ((a + b) / 2.0)[None, :]
    t = np.linspace(0.0, 1.0, n_points)[:, None]
    return a[None, :] + t * (b - a)[None, :]


def link_rng(master_seed, link_id: int) -> np.random.Generator:
    """Per-link RNG stream; independent of evaluation order and thread count."""
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), int(link_id)]))


def synthesize_link_attenuation(
    link,
    link_id: int,
    field_series,
    dust_params: dustmod.DustMedium,
    atm=None,
    catalog=(),
    partition=None,
    noise_sigma: float = DEFAULT_NOISE_SIGMA,
    master_seed: int = 0,
    path_samples: int = DEFAULT_PATH_SAMPLES,
    flags=None,
) -> AttenuationSeries:
    """Synthesize the per-km attenuation series of one link.

    ``field_series`` is a sequence of concentration grids (1/m^3), one per
    sol-hour.  The dust term uses the mean field value over equally spaced
    points along the link; the molecular term is constant in time for a
    fixed atmosphere; noise is additive Gaussian in dB/km drawn from a
    stream keyed by (master_seed, link_id).
    """
    points = link_path_points(link, path_samples)
    n_t = len(field_series)
    n_eff = np.empty(n_t)
    for t, grid in enumerate(field_series):
        if not np.all(grid.contains(points)):
            raise ValueError(f"link {link_id} endpoint outside field extent")
        n_eff[t] = grid.sample(points).mean()
    slope = dustmod.attenuation_per_concentration(dust_params, link.frequency)
    a_dust = slope * n_eff

    a_abs = 0.0
    if catalog and atm is not None:
        k_f = absorption_coefficient(atm, catalog, link.frequency, partition)
        a_abs = absorption_db_per_km(k_f)

    values = a_dust + a_abs
    if noise_sigma > 0:
        rng = link_rng(master_seed, link_id)
        values = values + rng.normal(0.0, noise_sigma, size=n_t)

    return AttenuationSeries(
        link_id=link_id,
        times=np.arange(n_t),
        values=values,
        free_space_db=free_space_path_loss(link.frequency, link.length),
        flags=None if flags is None else np.asarray(flags),
    )


def estimate_baseline(series: AttenuationSeries, clear_times) -> Baseline:
    """Median clear-sample attenuation per hour-of-sol.

    Every hour bin must contain at least one clear sample.
    """
    clear = set(int(t) for t in clear_times)
    per_hour = np.empty(HOURS_PER_SOL)
    times = np.asarray(series.times)
    for h in range(HOURS_PER_SOL):
        mask = np.array([int(t) in clear and t % HOURS_PER_SOL == h for t in times])
        if not mask.any():
            raise BaselineError(h)
        per_hour[h] = np.median(series.values[mask])
    return Baseline(per_hour)


def isolate_dust_attenuation(measured, baseline_at_hour, k_f: float = 0.0):
    """Residual dust attenuation in dB/km, clamped at zero.

    Returns (values, clamp_count); negative residuals map to 0 and are
    counted rather than propagated.
    """
    residual = np.asarray(measured, dtype=float) - np.asarray(baseline_at_hour, dtype=float)
    residual = residual - absorption_db_per_km(k_f)
    clamp_count = int(np.sum(residual < 0))
    clamped = np.maximum(residual, 0.0)
    if clamped.ndim == 0:
        return float(clamped), clamp_count
    return clamped, clamp_count


def signal_level_change(measured, baseline_at_hour):
    """Change in received signal level, dB: negative when dust increases loss."""
    return -(np.asarray(measured, dtype=float) - np.asarray(baseline_at_hour, dtype=float))
