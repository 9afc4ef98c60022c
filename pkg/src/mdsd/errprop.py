"""First-order uncertainty propagation for dust attenuation.

Analytic partial derivatives of the attenuation closed form propagate the
parameter budget (radius, concentration, complex permittivity) into a
variance breakdown; a truncated-Gaussian Monte Carlo estimator serves as
the independent cross-check.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .dust import DustMedium, attenuation_per_concentration, dust_attenuation


@dataclass(frozen=True)
class UncertaintyBudget:
    """One-sigma parameter uncertainties; concentration is relative."""

    sigma_r: float = 0.4e-6        # m (10% of the 4 um default)
    sigma_eps_real: float = 0.0775  # 5%
    sigma_eps_imag: float = 0.315   # 5%
    sigma_n_rel: float = 0.2        # 20%, relative to N

    def __post_init__(self):
        for name in ("sigma_r", "sigma_eps_real", "sigma_eps_imag", "sigma_n_rel"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass(frozen=True)
class VarianceComponents:
    """Per-parameter attenuation variances, (dB/km)^2, and the total sigma."""

    var_r: float
    var_n: float
    var_eps_real: float
    var_eps_imag: float

    @property
    def total_variance(self) -> float:
        return self.var_r + self.var_n + self.var_eps_real + self.var_eps_imag

    @property
    def total_sigma(self) -> float:
        return math.sqrt(self.total_variance)


def partial_derivatives(dust: DustMedium, f: float) -> dict:
    """Analytic partials of A_dust w.r.t. (r, N, eps_real, eps_imag)."""
    a = dust_attenuation(dust, f)
    denom = (dust.eps_real + 2.0) ** 2 + dust.eps_imag**2
    slope = attenuation_per_concentration(dust, f)
    return {
        "r": 3.0 * a / dust.mean_radius,
        "n": slope,
        "eps_real": -a * 2.0 * (dust.eps_real + 2.0) / denom,
        "eps_imag": (a / dust.eps_imag) * (1.0 - 2.0 * dust.eps_imag**2 / denom),
    }


def variance_components(dust: DustMedium, f: float, budget: UncertaintyBudget) -> VarianceComponents:
    """First-order variance budget: each term is (dA/dx)^2 * sigma_x^2."""
    p = partial_derivatives(dust, f)
    sigma_n = budget.sigma_n_rel * dust.concentration
    return VarianceComponents(
        var_r=(p["r"] * budget.sigma_r) ** 2,
        var_n=(p["n"] * sigma_n) ** 2,
        var_eps_real=(p["eps_real"] * budget.sigma_eps_real) ** 2,
        var_eps_imag=(p["eps_imag"] * budget.sigma_eps_imag) ** 2,
    )


@dataclass(frozen=True)
class MonteCarloResult:
    sigma: float              # dB/km
    rejection_rate: float     # fraction of redrawn nonphysical samples


def monte_carlo_sigma(
    dust: DustMedium,
    f: float,
    budget: UncertaintyBudget,
    n_samples: int = 10**6,
    seed: int = 0,
) -> MonteCarloResult:
    """Monte Carlo standard deviation of the dust attenuation.

    Parameters are perturbed with independent Gaussians per the budget;
    nonphysical draws (r <= 0, eps_imag <= 0, N < 0) are rejected and
    redrawn, with the rejection rate reported.
    """
    if n_samples < 10**4:
        raise ValueError("n_samples must be >= 1e4")
    rng = np.random.default_rng(seed)
    sigma_n = budget.sigma_n_rel * dust.concentration

    def draw(center, sigma, lower_open):
        if sigma == 0:
            return np.full(n_samples, center), 0
        out = rng.normal(center, sigma, n_samples)
        rejected = 0
        bad = out <= 0 if lower_open else out < 0
        while bad.any():
            rejected += int(bad.sum())
            out[bad] = rng.normal(center, sigma, int(bad.sum()))
            bad = (out <= 0 if lower_open else out < 0)
        return out, rejected

    r, rej_r = draw(dust.mean_radius, budget.sigma_r, lower_open=True)
    n, rej_n = draw(dust.concentration, sigma_n, lower_open=False)
    ei, rej_ei = draw(dust.eps_imag, budget.sigma_eps_imag, lower_open=True)
    if budget.sigma_eps_real == 0:
        er = np.full(n_samples, dust.eps_real)
        rej_er = 0
    else:
        er = rng.normal(dust.eps_real, budget.sigma_eps_real, n_samples)
        rej_er = 0

    from .constants import wavelength
    from .dust import DUST_ATTENUATION_COEFF

    lam = wavelength(f)
    denom = (er + 2.0) ** 2 + ei**2
    a = DUST_ATTENUATION_COEFF * ei / (denom * lam) * n * r**3
    total_rejected = rej_r + rej_n + rej_ei + rej_er
    return MonteCarloResult(
        sigma=float(np.std(a)),
        rejection_rate=total_rejected / (4 * n_samples),
    )


def concentration_variance(dust: DustMedium, f: float, budget: UncertaintyBudget) -> float:
    """Per-link variance in concentration units for the mapping weights.

    Converts the attenuation variance through the inverse slope (dN/dA)^2.
    """
    total_var = variance_components(dust, f, budget).total_variance
    slope = attenuation_per_concentration(dust, f)
    return total_var / slope**2


def write_variance_vs_frequency(path, dust: DustMedium, budget: UncertaintyBudget, frequencies) -> None:
    """CSV of the variance breakdown over a frequency sweep."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["frequency_hz", "var_r", "var_n", "var_eps_real", "var_eps_imag", "total_sigma"]
        )
        for f in frequencies:
            vc = variance_components(dust, f, budget)
            writer.writerow(
                [
                    f"{f:.12g}",
                    f"{vc.var_r:.12g}",
                    f"{vc.var_n:.12g}",
                    f"{vc.var_eps_real:.12g}",
                    f"{vc.var_eps_imag:.12g}",
                    f"{vc.total_sigma:.12g}",
                ]
            )
