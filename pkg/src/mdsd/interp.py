"""Spatial reconstruction of dust-intensity maps from link samples.

Six interpolators behind a small sklearn-style estimator API (``fit`` on
scattered samples, ``predict`` on query points, ``get_params`` for
composition with the wider ecosystem), plus the uncertainty-weighted
mapping scheme that folds per-sample measurement variance into the
distance weights.

Triangulation-based methods (linear, cubic) return NaN outside the sample
convex hull; the other four cover every query point.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import interpolate as sp_interp
from scipy import linalg as sp_linalg
from scipy.optimize import least_squares
from scipy.spatial import QhullError, cKDTree
from sklearn.base import BaseEstimator

from .grids import GridSpec, IntensityGrid

METHODS = ("linear", "nearest", "cubic", "rbf", "idw", "kriging")


class MethodInfeasibleError(ValueError):
    """Too few or degenerate samples for the requested method."""


class EmptyEstimateError(ValueError):
    """No sample received finite weight at some query point."""


@dataclass
class SampleSet:
    """Scattered samples: positions (km), values, and per-sample variance."""

    points: np.ndarray       # (n, 2)
    values: np.ndarray       # (n,)
    variances: np.ndarray = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.points.ndim != 2 or self.points.shape[1] != 2:
            raise ValueError("points must be (n, 2)")
        if self.values.shape != (len(self.points),):
            raise ValueError("values must be (n,)")
        if not np.all(np.isfinite(self.points)):
            raise ValueError("positions must be finite")
        if self.variances is None:
            self.variances = np.zeros(len(self.points))
        else:
            self.variances = np.asarray(self.variances, dtype=float)
            if self.variances.shape != self.values.shape:
                raise ValueError("variances must match values")
            if np.any(self.variances < 0):
                raise ValueError("variances must be >= 0")

    def __len__(self):
        return len(self.points)


def _check_fitted(est):
    if not hasattr(est, "points_"):
        raise RuntimeError("estimator is not fitted")


class NearestInterpolator(BaseEstimator):
    """Nearest-neighbor lookup; exact ties resolve to the lowest sample index."""

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        if len(X) < 1:
            raise MethodInfeasibleError("nearest needs >= 1 sample")
        self.points_ = X
        self.values_ = np.asarray(y, dtype=float)
        return self

    def predict(self, X):
        _check_fitted(self)
        X = np.asarray(X, dtype=float)
        # squared distances, chunked to bound memory on large grids
        out = np.empty(len(X))
        for start in range(0, len(X), 4096):
            block = X[start : start + 4096]
            d2 = ((block[:, None, :] - self.points_[None, :, :]) ** 2).sum(axis=2)
            out[start : start + 4096] = self.values_[np.argmin(d2, axis=1)]
        return out


class LinearInterpolator(BaseEstimator):
    """Barycentric interpolation on the Delaunay triangulation; NaN off-hull."""

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        if len(X) < 3:
            raise MethodInfeasibleError("linear needs >= 3 samples")
        try:
            self._interp = sp_interp.LinearNDInterpolator(X, np.asarray(y, dtype=float))
        except QhullError as exc:
            raise MethodInfeasibleError(f"triangulation failed: {exc}") from None
        self.points_ = X
        self.values_ = np.asarray(y, dtype=float)
        return self

    def predict(self, X):
        _check_fitted(self)
        return np.asarray(self._interp(np.asarray(X, dtype=float)), dtype=float)


class CubicInterpolator(BaseEstimator):
    """C1 piecewise-cubic (Clough-Tocher) on the triangulation; NaN off-hull."""

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        if len(X) < 3:
            raise MethodInfeasibleError("cubic needs >= 3 samples")
        try:
            self._interp = sp_interp.CloughTocher2DInterpolator(X, np.asarray(y, dtype=float))
        except QhullError as exc:
            raise MethodInfeasibleError(f"triangulation failed: {exc}") from None
        self.points_ = X
        self.values_ = np.asarray(y, dtype=float)
        return self

    def predict(self, X):
        _check_fitted(self)
        return np.asarray(self._interp(np.asarray(X, dtype=float)), dtype=float)


class IdwInterpolator(BaseEstimator):
    """Inverse-distance weighting; a zero-distance query returns the sample."""

    def __init__(self, power: float = 2.0):
        self.power = power

    def fit(self, X, y):
        if self.power <= 0:
            raise ValueError("power must be > 0")
        X = np.asarray(X, dtype=float)
        if len(X) < 1:
            raise MethodInfeasibleError("idw needs >= 1 sample")
        self.points_ = X
        self.values_ = np.asarray(y, dtype=float)
        return self

    def predict(self, X):
        _check_fitted(self)
        X = np.asarray(X, dtype=float)
        out = np.empty(len(X))
        for start in range(0, len(X), 4096):
            block = X[start : start + 4096]
            d = np.sqrt(((block[:, None, :] - self.points_[None, :, :]) ** 2).sum(axis=2))
            exact_rows = np.nonzero((d == 0.0).any(axis=1))[0]
            with np.errstate(divide="ignore"):
                w = d**-self.power
            w[~np.isfinite(w)] = 0.0
            denom = w.sum(axis=1)
            denom[denom == 0.0] = np.nan
            vals = (w @ self.values_) / denom
            # a query sitting on a sample returns that sample (lowest index
            # on exact ties)
            for r in np.unique(exact_rows):
                vals[r] = self.values_[d[r].argmin()]
            out[start : start + 4096] = vals
        return out


class RbfInterpolator(BaseEstimator):
    """Multiquadric radial basis interpolation with Tikhonov jitter.

    Shape parameter defaults to the mean nearest-neighbor sample spacing;
    the jitter (1e-10 of the kernel-matrix trace) keeps the solve well
    conditioned without visibly moving the surface off the samples.
    """

    def __init__(self, shape_parameter=None, jitter_scale: float = 1e-10):
        self.shape_parameter = shape_parameter
        self.jitter_scale = jitter_scale

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if len(X) < 1:
            raise MethodInfeasibleError("rbf needs >= 1 sample")
        if self.shape_parameter is not None:
            eps = float(self.shape_parameter)
        elif len(X) > 1:
            nn, _ = cKDTree(X).query(X, k=2)
            eps = float(np.mean(nn[:, 1]))
        else:
            eps = 1.0
        if eps <= 0:
            eps = 1.0
        d = np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=2))
        phi = np.sqrt(d**2 + eps**2)
        phi[np.diag_indices_from(phi)] += self.jitter_scale * np.trace(phi) / max(len(X), 1)
        try:
            self.weights_ = sp_linalg.solve(phi, y, assume_a="sym")
        except sp_linalg.LinAlgError:
            self.weights_ = np.linalg.lstsq(phi, y, rcond=None)[0]
        self.eps_ = eps
        self.points_ = X
        self.values_ = y
        return self

    def predict(self, X):
        _check_fitted(self)
        X = np.asarray(X, dtype=float)
        out = np.empty(len(X))
        for start in range(0, len(X), 4096):
            block = X[start : start + 4096]
            d = np.sqrt(((block[:, None, :] - self.points_[None, :, :]) ** 2).sum(axis=2))
            out[start : start + 4096] = np.sqrt(d**2 + self.eps_**2) @ self.weights_
        return out


@dataclass(frozen=True)
class Variogram:
    """Exponential variogram: gamma(h) = nugget + psill * (1 - exp(-h/range))."""

    nugget: float
    psill: float
    range_: float

    def __post_init__(self):
        if self.nugget < 0 or self.psill < 0 or self.range_ <= 0:
            raise ValueError("variogram parameters out of range")

    @property
    def sill(self) -> float:
        return self.nugget + self.psill

    def __call__(self, h):
        h = np.asarray(h, dtype=float)
        g = np.where(h > 0, self.nugget + self.psill * (1.0 - np.exp(-h / self.range_)), 0.0)
        return g if g.ndim else float(g)


def empirical_semivariogram(points, values, n_bins: int = 12, max_lag: float = None):
    """Binned empirical semivariance (bin centers, gamma, pair counts).

    ``max_lag`` truncates the lag axis; pairs farther apart are dropped.
    """
    points = np.asarray(points, dtype=float)
    values = np.asarray(values, dtype=float)
    iu = np.triu_indices(len(points), k=1)
    d = np.sqrt(((points[iu[0]] - points[iu[1]]) ** 2).sum(axis=1))
    sv = 0.5 * (values[iu[0]] - values[iu[1]]) ** 2
    if max_lag is not None:
        keep = d <= max_lag
        d, sv = d[keep], sv[keep]
    d_max = d.max() if len(d) else 0.0
    if d_max == 0:
        raise MethodInfeasibleError("all samples coincide")
    edges = np.linspace(0.0, d_max, n_bins + 1)
    centers = 0.5 * (edges[:-1] + edges[1:])
    gamma = np.full(n_bins, np.nan)
    counts = np.zeros(n_bins, dtype=int)
    idx = np.clip(np.digitize(d, edges) - 1, 0, n_bins - 1)
    for b in range(n_bins):
        mask = idx == b
        counts[b] = mask.sum()
        if counts[b]:
            gamma[b] = sv[mask].mean()
    return centers, gamma, counts


def fit_variogram(points, values, n_bins: int = 12) -> Variogram:
    """Least-squares exponential variogram fit over binned semivariances.

    Degenerate inputs (< 5 samples, or a flat field) fall back to the
    sample variance as sill with a range of a third of the maximum lag.
    """
    points = np.asarray(points, dtype=float)
    values = np.asarray(values, dtype=float)
    iu = np.triu_indices(len(points), k=1)
    d = np.sqrt(((points[iu[0]] - points[iu[1]]) ** 2).sum(axis=1))
    d_max = float(d.max()) if len(d) else 1.0
    if d_max <= 0:
        d_max = 1.0
    fallback_sill = float(np.var(values))
    if fallback_sill <= 0:
        fallback_sill = 1.0
    fallback = Variogram(0.0, fallback_sill, d_max / 3.0)
    if len(points) < 5:
        return fallback
    # only fit the short-lag half of the cloud: long lags have few pairs and
    # can dip back down (hole effect), which otherwise drags the fit toward
    # a pure-nugget model
    centers, gamma, counts = empirical_semivariogram(
        points, values, n_bins, max_lag=d_max / 2.0
    )
    ok = np.isfinite(gamma) & (counts > 0)
    if ok.sum() < 3 or not np.any(gamma[ok] > 0):
        return fallback

    h, g, w = centers[ok], gamma[ok], np.sqrt(counts[ok].astype(float))

    def residual(params):
        nugget, psill, rng = params
        return w * (nugget + psill * (1.0 - np.exp(-h / rng)) - g)

    bin_width = h[0] if h[0] > 0 else d_max / (2.0 * n_bins)
    x0 = np.array([0.0, max(g.max(), 1e-12), max(d_max / 6.0, bin_width)])
    try:
        res = least_squares(
            residual,
            x0,
            bounds=([0.0, 1e-15, bin_width / 2.0], [np.inf, np.inf, d_max]),
        )
        nugget, psill, rng = res.x
        return Variogram(float(nugget), float(psill), float(rng))
    except Exception:
        return fallback


class KrigingInterpolator(BaseEstimator):
    """Ordinary kriging under a fitted (or supplied) exponential variogram."""

    def __init__(self, variogram: Variogram = None, n_bins: int = 12):
        self.variogram = variogram
        self.n_bins = n_bins

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if len(X) < 2:
            raise MethodInfeasibleError("kriging needs >= 2 samples")
        vario = self.variogram or fit_variogram(X, y, self.n_bins)
        n = len(X)
        d = np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=2))
        a = np.empty((n + 1, n + 1))
        a[:n, :n] = vario(d)
        a[:n, n] = 1.0
        a[n, :n] = 1.0
        a[n, n] = 0.0
        try:
            self._lu = sp_linalg.lu_factor(a)
            self._lstsq_a = None
        except (sp_linalg.LinAlgError, ValueError):
            self._lu = None
            self._lstsq_a = a
        self.variogram_ = vario
        self.points_ = X
        self.values_ = y
        return self

    def predict(self, X):
        _check_fitted(self)
        X = np.asarray(X, dtype=float)
        n = len(self.points_)
        out = np.empty(len(X))
        for start in range(0, len(X), 4096):
            block = X[start : start + 4096]
            d = np.sqrt(((block[:, None, :] - self.points_[None, :, :]) ** 2).sum(axis=2))
            rhs = np.empty((n + 1, len(block)))
            rhs[:n] = self.variogram_(d).T
            rhs[n] = 1.0
            if self._lu is not None:
                w = sp_linalg.lu_solve(self._lu, rhs)
            else:
                w = np.linalg.lstsq(self._lstsq_a, rhs, rcond=None)[0]
            out[start : start + 4096] = w[:n].T @ self.values_
        return out


_ESTIMATORS = {
    "nearest": NearestInterpolator,
    "linear": LinearInterpolator,
    "cubic": CubicInterpolator,
    "idw": IdwInterpolator,
    "rbf": RbfInterpolator,
    "kriging": KrigingInterpolator,
}


@dataclass
class InterpConfig:
    method: str = "linear"
    idw_power: float = 2.0
    rbf_shape: float = None
    variogram: Variogram = None
    z: float = 1.0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.idw_power <= 0:
            raise ValueError("idw_power must be > 0")


def make_estimator(cfg: InterpConfig):
    if cfg.method == "idw":
        return IdwInterpolator(power=cfg.idw_power)
    if cfg.method == "rbf":
        return RbfInterpolator(shape_parameter=cfg.rbf_shape)
    if cfg.method == "kriging":
        return KrigingInterpolator(variogram=cfg.variogram)
    return _ESTIMATORS[cfg.method]()


def interpolate(samples: SampleSet, grid_spec: GridSpec, cfg: InterpConfig) -> IntensityGrid:
    """Fill a grid from scattered samples with the configured method.

    Cells outside the convex hull of triangulation-based methods come back
    invalid; all other methods produce a fully valid grid.
    """
    est = make_estimator(cfg).fit(samples.points, samples.values)
    values = est.predict(grid_spec.cell_points()).reshape(grid_spec.ny, grid_spec.nx)
    return IntensityGrid(grid_spec, values, np.isfinite(values))


def distance_weight(l_max: float):
    """Default mapping weight: W_i = (d_i / L_max)^2."""
    if l_max <= 0:
        raise ValueError("l_max must be > 0")

    def weight(d):
        return (d / l_max) ** 2

    return weight


def uncertainty_weighted_map(
    samples: SampleSet,
    grid_spec: GridSpec,
    z: float = 1.0,
    weight_fn=None,
    l_max: float = None,
) -> IntensityGrid:
    """Variance-aware weighted average map.

    theta(x, y) = sum_i (W_i + z * s_i)^-1 r_i / sum_i (W_i + z * s_i)^-1
    where W_i is the distance weight and s_i the sample variance normalized
    by the median variance (making z dimensionless).  A zero denominator
    (query at a zero-variance sample with z active, or any sample when
    z = 0) gives that sample full weight.
    """
    if len(samples) < 1:
        raise EmptyEstimateError("no samples")
    if weight_fn is None:
        if l_max is None:
            raise ValueError("provide weight_fn or l_max")
        weight_fn = distance_weight(l_max)
    med = float(np.median(samples.variances))
    norm_var = samples.variances / med if med > 0 else np.zeros(len(samples))

    cells = grid_spec.cell_points()
    values = np.empty(len(cells))
    for start in range(0, len(cells), 4096):
        block = cells[start : start + 4096]
        d = np.sqrt(((block[:, None, :] - samples.points[None, :, :]) ** 2).sum(axis=2))
        denom = weight_fn(d) + z * norm_var[None, :]
        zero = denom == 0.0
        with np.errstate(divide="ignore"):
            w = 1.0 / denom
        vals = np.empty(len(block))
        for r in range(len(block)):
            if zero[r].any():
                vals[r] = samples.values[zero[r]].mean()
                continue
            finite = np.isfinite(w[r])
            if not finite.any():
                raise EmptyEstimateError("no finite weights at query point")
            vals[r] = (w[r, finite] * samples.values[finite]).sum() / w[r, finite].sum()
        values[start : start + 4096] = vals
    grid_values = values.reshape(grid_spec.ny, grid_spec.nx)
    return IntensityGrid(grid_spec, grid_values, np.ones_like(grid_values, dtype=bool))
