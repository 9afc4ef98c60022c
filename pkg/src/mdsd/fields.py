"""Synthetic dust fields (CDOD) for desk-scale simulation runs.

Storm seasons are sums of drifting anisotropic Gaussian blobs; calm
seasons are a low uniform background with mild smooth spatial noise.  The
continuous generator is exposed so tests can integrate it independently of
any raster resolution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import GridSpec, IntensityGrid

STORM_PEAK_RANGE = (0.8, 2.5)
CALM_BACKGROUND_RANGE = (0.05, 0.2)
CALM_NOISE_AMPLITUDE = 0.04


@dataclass(frozen=True)
class GaussianBlob:
    """One anisotropic Gaussian dust cell drifting at constant velocity."""

    peak: float
    x0: float
    y0: float
    sigma_x: float
    sigma_y: float
    vx: float      # km per sol-hour
    vy: float

    def center_at(self, t: float):
        return self.x0 + self.vx * t, self.y0 + self.vy * t

    def evaluate(self, t: float, x, y):
        cx, cy = self.center_at(t)
        return self.peak * np.exp(
            -((np.asarray(x) - cx) ** 2) / (2.0 * self.sigma_x**2)
            - ((np.asarray(y) - cy) ** 2) / (2.0 * self.sigma_y**2)
        )

    def integral(self) -> float:
        """Total CDOD mass; drift-invariant by construction."""
        return float(self.peak * 2.0 * np.pi * self.sigma_x * self.sigma_y)


@dataclass
class SyntheticField:
    """Continuous CDOD field over a rectangular area and hourly time axis."""

    season: str
    area: tuple                 # (width, height) km
    blobs: list
    background: float
    noise_grid: IntensityGrid = None   # calm-season smooth noise, static

    def evaluate(self, t: float, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.full(np.broadcast(x, y).shape, self.background, dtype=float)
        for blob in self.blobs:
            out = out + blob.evaluate(t, x, y)
        if self.noise_grid is not None:
            pts = np.column_stack([np.ravel(x), np.ravel(y)])
            out = out + self.noise_grid.sample(pts).reshape(out.shape)
        return out

    def rasterize(self, t: float, spec: GridSpec) -> IntensityGrid:
        xx, yy = spec.cell_centers()
        values = self.evaluate(t, xx, yy)
        return IntensityGrid(spec, values, np.ones_like(values, dtype=bool))

    def rasterize_series(self, times, spec: GridSpec):
        return [self.rasterize(t, spec) for t in times]


def _smooth_noise(area, seed, nx: int = 16, ny: int = 8) -> IntensityGrid:
    """Coarse random raster; bilinear sampling makes it spatially smooth."""
    rng = np.random.default_rng(seed)
    w, h = area
    spec = GridSpec(0.0, w, 0.0, h, nx, ny)
    values = rng.uniform(0.0, CALM_NOISE_AMPLITUDE, (ny, nx))
    return IntensityGrid(spec, values)


def generate_synthetic_field(season: str, area, seed, duration_hours: int = 240) -> SyntheticField:
    """Build the continuous CDOD field for one season.

    Storm: 2-5 blobs with peaks in [0.8, 2.5], kept away from the borders
    so their mass stays on the map while drifting over the full duration.
    Calm: uniform background in [0.05, 0.2] plus smooth noise; the calm
    maximum stays strictly below the lowest storm peak.
    """
    w, h = area
    if w <= 0 or h <= 0:
        raise ValueError("area dimensions must be positive")
    season_key = {"storm": 1, "calm": 2}.get(season)
    if season_key is None:
        raise ValueError(f"unknown season {season!r}")
    rng = np.random.default_rng(np.random.SeedSequence([season_key, int(seed)]))
    if season == "storm":
        n_blobs = int(rng.integers(2, 6))
        blobs = []
        for _ in range(n_blobs):
            sigma_x = rng.uniform(0.06, 0.12) * w
            sigma_y = rng.uniform(0.06, 0.12) * h
            x0 = rng.uniform(0.3 * w, 0.7 * w)
            y0 = rng.uniform(0.3 * h, 0.7 * h)
            # drift bounded so centers stay in the inner area over the run
            max_vx = 0.1 * w / max(duration_hours, 1)
            max_vy = 0.1 * h / max(duration_hours, 1)
            blobs.append(
                GaussianBlob(
                    peak=float(rng.uniform(*STORM_PEAK_RANGE)),
                    x0=float(x0),
                    y0=float(y0),
                    sigma_x=float(sigma_x),
                    sigma_y=float(sigma_y),
                    vx=float(rng.uniform(-max_vx, max_vx)),
                    vy=float(rng.uniform(-max_vy, max_vy)),
                )
            )
        return SyntheticField(season="storm", area=tuple(area), blobs=blobs, background=0.05)
    if season == "calm":
        background = float(rng.uniform(*CALM_BACKGROUND_RANGE))
        noise = _smooth_noise(area, rng.integers(0, 2**31))
        return SyntheticField(
            season="calm", area=tuple(area), blobs=[], background=background, noise_grid=noise
        )
    raise ValueError(f"unknown season {season!r}")
