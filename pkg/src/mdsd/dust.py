"""Closed-form dust attenuation, visibility inversion, and CDOD conversion.

All relations are algebraic in the dust medium parameters: attenuation is
linear in particle concentration N, cubic in mean radius, and inversely
proportional to wavelength.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .constants import wavelength

# Leading coefficient of the dust attenuation closed form (dB/km for N in
# 1/m^3, radius in m, wavelength in m).
DUST_ATTENUATION_COEFF = 1.029e6

# Visibility relation constants
VISIBILITY_COEFF = 566.0
CONCENTRATION_VISIBILITY_COEFF = 5.5e-4


@dataclass(frozen=True)
class DustMedium:
    """Martian dust: mean particle radius, complex permittivity, concentration."""

    mean_radius: float = 4e-6        # m
    eps_real: float = 1.55
    eps_imag: float = 6.3
    concentration: float = 0.0       # 1/m^3

    def __post_init__(self):
        if self.mean_radius <= 0:
            raise ValueError("mean_radius must be > 0")
        if self.eps_imag <= 0:
            raise ValueError("eps_imag must be > 0")
        if self.concentration < 0:
            raise ValueError("concentration must be >= 0")

    def with_concentration(self, n: float) -> "DustMedium":
        return replace(self, concentration=n)


def _denominator(dust: DustMedium) -> float:
    return (dust.eps_real + 2.0) ** 2 + dust.eps_imag**2


def attenuation_per_concentration(dust: DustMedium, f: float) -> float:
    """Slope dA/dN in (dB/km) per (1/m^3); independent of N."""
    if f <= 0:
        raise ValueError("frequency must be > 0")
    lam = wavelength(f)
    return (
        DUST_ATTENUATION_COEFF
        * dust.eps_imag
        / (_denominator(dust) * lam)
        * dust.mean_radius**3
    )


def dust_attenuation(dust: DustMedium, f: float):
    """Dust-induced attenuation in dB/km for the medium's concentration."""
    return attenuation_per_concentration(dust, f) * dust.concentration


def concentration_from_attenuation(a_dust, dust: DustMedium, f: float):
    """Invert the attenuation closed form for particle concentration N."""
    a = np.asarray(a_dust, dtype=float)
    if np.any(a < 0):
        raise ValueError("a_dust must be >= 0")
    n = a / attenuation_per_concentration(dust, f)
    return n if n.ndim else float(n)


def visibility_from_attenuation(a_dust: float, dust: DustMedium, f: float, allow_clear: bool = False) -> float:
    """Optical visibility in km from isolated dust attenuation (dB/km).

    A_dust = 0 means clear air: with ``allow_clear`` the function returns
    +inf, otherwise it raises.
    """
    if a_dust < 0:
        raise ValueError("a_dust must be >= 0")
    if a_dust == 0:
        if allow_clear:
            return math.inf
        raise ValueError("visibility undefined at zero dust attenuation")
    lam = wavelength(f)
    return (
        VISIBILITY_COEFF
        * dust.mean_radius
        * dust.eps_imag
        / (a_dust * lam * _denominator(dust))
    )


def concentration_from_visibility(v: float, r: float) -> float:
    """Particle concentration (1/m^3) from visibility (km) and radius (m)."""
    if v <= 0:
        raise ValueError("visibility must be > 0")
    if r <= 0:
        raise ValueError("radius must be > 0")
    return CONCENTRATION_VISIBILITY_COEFF / (r**2 * v)


@dataclass(frozen=True)
class CdodConversion:
    """Column dust optical depth to near-surface concentration.

    The 1.3 factor converts absorption optical depth to extinction optical
    depth; Q_ext is the Mie extinction efficiency of Martian dust at the
    climatology reference wavelength.
    """

    extinction_factor: float = 1.3
    q_ext: float = 3.57
    radius: float = 4e-6         # m
    scale_height: float = 1.11e4  # m

    def __post_init__(self):
        for name in ("extinction_factor", "q_ext", "radius", "scale_height"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")


def concentration_from_cdod(cdod, conv: CdodConversion = CdodConversion()):
    """N = CDOD * 1.3 / (Q_ext * pi * r^2 * H); linear in CDOD."""
    c = np.asarray(cdod, dtype=float)
    if np.any(c < 0):
        raise ValueError("cdod must be >= 0")
    n = c * conv.extinction_factor / (conv.q_ext * math.pi * conv.radius**2 * conv.scale_height)
    return n if n.ndim else float(n)
