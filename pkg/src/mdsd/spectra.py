"""Line-by-line molecular absorption for the CO2-dominated Martian atmosphere.

Builds absorption coefficients k(f) from catalog line records under the
low-pressure regime where Doppler broadening dominates, and converts them
to Beer-Lambert path loss.

Units: line intensities are converted once at parse time from catalog native
units (cm^-1/(molecule cm^-2)) to Hz m^2 per molecule, so that
sigma [m^2] * number density [1/m^3] yields k in 1/m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import (
    AVOGADRO,
    BOLTZMANN,
    C2_CM_K,
    DB_PER_KM_PER_INV_M,
    GAS_CONSTANT,
    HITRAN_INTENSITY_TO_SI,
    LOG10_E,
    P_STANDARD,
    PLANCK,
    SPEED_OF_LIGHT,
    T_REF,
    T_STP,
)

# Molar masses (kg/mol) by HITRAN molecule id, for the species relevant to
# the Martian mixture.  Extend as needed.
MOLAR_MASS_KG_MOL = {
    1: 0.01801528,   # H2O
    2: 0.0440095,    # CO2
    5: 0.0280101,    # CO
    7: 0.0319988,    # O2
    22: 0.0280134,   # N2
}

TEMPERATURE_VALIDITY = (150.0, 320.0)  # K

# Default line wing cutoff, in Doppler half-widths.  Gaussian wings decay
# super-exponentially, so contributions beyond this are far below machine
# epsilon relative to the peak.
DEFAULT_WING_CUTOFF = 20.0

SQRT_LN2_OVER_PI = math.sqrt(math.log(2.0) / math.pi)
LN2 = math.log(2.0)


class CatalogParseError(ValueError):
    """Malformed catalog record; carries the zero-based record index."""

    def __init__(self, record_index: int, message: str):
        super().__init__(f"record {record_index}: {message}")
        self.record_index = record_index


@dataclass(frozen=True)
class SpectralLine:
    """One catalog absorption line.

    ``reference_intensity`` is stored in SI (Hz m^2 per molecule) at 296 K;
    catalog intensities are converted at parse time.
    """

    molecule_id: int
    isotopologue_id: int
    center_frequency: float      # Hz
    reference_intensity: float   # Hz m^2 / molecule at T_REF
    lower_state_energy: float    # cm^-1
    molar_mass: float            # kg/mol

    def __post_init__(self):
        if self.center_frequency <= 0:
            raise ValueError("center_frequency must be > 0")
        if self.reference_intensity < 0:
            raise ValueError("reference_intensity must be >= 0")
        if self.lower_state_energy < 0:
            raise ValueError("lower_state_energy must be >= 0")
        if self.molar_mass <= 0:
            raise ValueError("molar_mass must be > 0")


@dataclass(frozen=True)
class AtmosphereState:
    """Ambient temperature, pressure and gas mixture.

    ``composition`` maps (molecule_id, isotopologue_id) to the parent-gas
    mixing ratio.  Catalog intensities are already abundance-weighted
    (catalog convention), so no second isotopic-abundance factor is applied
    anywhere downstream.
    """

    temperature: float   # K
    pressure: float      # Pa
    composition: dict = field(default_factory=dict)

    def __post_init__(self):
        lo, hi = TEMPERATURE_VALIDITY
        if not lo <= self.temperature <= hi:
            raise ValueError(
                f"temperature {self.temperature} K outside validity window "
                f"[{lo}, {hi}] K"
            )
        if self.pressure <= 0:
            raise ValueError("pressure must be > 0")
        total = sum(self.composition.values())
        if total > 1.0 + 1e-6:
            raise ValueError(f"mixing ratios sum to {total} > 1")
        for q in self.composition.values():
            if q < 0:
                raise ValueError("mixing ratios must be >= 0")


# Martian near-surface defaults: CO2 95.32%, N2 2.7%, Ar 1.6%.  Ar has no
# dipole-allowed lines and never appears in catalogs, so it is simply
# absent from the composition map.
MARS_COMPOSITION = {(2, 1): 0.9532, (22, 1): 0.027}


def mars_atmosphere(temperature: float = 210.0, pressure: float = 610.0) -> AtmosphereState:
    """Convenience constructor with the default Martian mixture."""
    return AtmosphereState(temperature, pressure, dict(MARS_COMPOSITION))


@dataclass(frozen=True)
class PartitionModel:
    """Partition function ratio Q(T_ref)/Q(T).

    ``table`` mode interpolates per-isotopologue (T, Q) tables linearly;
    ``power-law`` mode uses (T_ref/T)**beta (beta = 1 is appropriate for
    linear molecules such as CO2 and N2).
    """

    mode: str = "power-law"
    table: dict | None = None    # key -> sequence of (T, Q), T increasing
    beta: float = 1.0

    def __post_init__(self):
        if self.mode not in ("power-law", "table"):
            raise ValueError(f"unknown partition mode {self.mode!r}")
        if self.beta <= 0:
            raise ValueError("beta must be > 0")
        if self.mode == "table":
            if not self.table:
                raise ValueError("table mode requires a table")
            for key, rows in self.table.items():
                temps = [t for t, _ in rows]
                if any(b <= a for a, b in zip(temps, temps[1:])):
                    raise ValueError(f"table temperatures not increasing for {key!r}")

    def q_ratio(self, T: float, key=None) -> float:
        """Q(T_ref)/Q(T) for the given isotopologue key."""
        if self.mode == "power-law" or self.table is None or key not in self.table:
            return (T_REF / T) ** self.beta
        rows = self.table[key]
        temps = np.array([t for t, _ in rows])
        qs = np.array([q for _, q in rows])
        q_t = float(np.interp(T, temps, qs))
        q_ref = float(np.interp(T_REF, temps, qs))
        return q_ref / q_t


def parse_partition_table(text: str) -> PartitionModel:
    """Parse a plain-text partition table: "key T_kelvin Q_value" per line.

    '#' starts a comment; keys are strings like "2_1" (molecule_isotopologue).
    """
    table: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"partition table line {lineno}: expected 3 fields")
        key = parts[0]
        try:
            t, q = float(parts[1]), float(parts[2])
        except ValueError as exc:
            raise ValueError(f"partition table line {lineno}: {exc}") from None
        table.setdefault(key, []).append((t, q))
    for rows in table.values():
        rows.sort()
    return PartitionModel(mode="table", table=table)


def parse_line_catalog(raw_text, gas_filter, freq_window) -> list[SpectralLine]:
    """Parse fixed-width 160-character catalog records (2004 .par layout).

    Columns used: 1-2 molecule id, 3 isotopologue id, 4-15 wavenumber
    (cm^-1), 16-25 intensity, 46-55 lower-state energy (cm^-1).  Returns
    lines whose molecule id is in ``gas_filter`` and whose center frequency
    falls inside ``freq_window`` (Hz), in catalog order.
    """
    if isinstance(raw_text, bytes):
        raw_text = raw_text.decode("ascii")
    f_lo, f_hi = freq_window
    if not f_lo < f_hi:
        raise ValueError("freq_window lower bound must be < upper bound")
    lines: list[SpectralLine] = []
    for idx, record in enumerate(raw_text.splitlines()):
        if not record.strip():
            continue
        if len(record) != 160:
            raise CatalogParseError(idx, f"expected 160 characters, got {len(record)}")
        try:
            mol = int(record[0:2])
            iso = int(record[2:3])
            wavenumber = float(record[3:15])
            intensity = float(record[15:25])
            e_lower = float(record[45:55])
        except ValueError as exc:
            raise CatalogParseError(idx, f"non-numeric field: {exc}") from None
        if mol not in gas_filter:
            continue
        freq = 100.0 * SPEED_OF_LIGHT * wavenumber
        if not f_lo <= freq <= f_hi:
            continue
        try:
            molar_mass = MOLAR_MASS_KG_MOL[mol]
        except KeyError:
            raise CatalogParseError(idx, f"no molar mass for molecule id {mol}") from None
        lines.append(
            SpectralLine(
                molecule_id=mol,
                isotopologue_id=iso,
                center_frequency=freq,
                reference_intensity=intensity * HITRAN_INTENSITY_TO_SI,
                lower_state_energy=e_lower,
                molar_mass=molar_mass,
            )
        )
    return lines


def line_intensity_at(line: SpectralLine, T: float, partition: PartitionModel) -> float:
    """Temperature-scaled line intensity S(T) from the 296 K reference.

    S(T) = S(T0) * Q_ratio * exp(-c2*E_l*(1/T - 1/T0))
                 * (1 - exp(-h f0 / kB T)) / (1 - exp(-h f0 / kB T0))
    """
    if T <= 0:
        raise ValueError("temperature must be > 0")
    q_ratio = partition.q_ratio(T, key=(line.molecule_id, line.isotopologue_id))
    boltzmann_term = math.exp(-C2_CM_K * line.lower_state_energy * (1.0 / T - 1.0 / T_REF))
    x = PLANCK * line.center_frequency / BOLTZMANN
    stim = (1.0 - math.exp(-x / T)) / (1.0 - math.exp(-x / T_REF))
    return line.reference_intensity * q_ratio * boltzmann_term * stim


def doppler_halfwidth(line: SpectralLine, T: float) -> float:
    """Doppler half-width at half maximum, Hz."""
    if T <= 0:
        raise ValueError("temperature must be > 0")
    return (line.center_frequency / SPEED_OF_LIGHT) * math.sqrt(
        2.0 * GAS_CONSTANT * T * LN2 / line.molar_mass
    )


def gaussian_line_shape(f, line_center: float, a_D: float):
    """Doppler (Gaussian) line profile, normalized to unit integral over f."""
    if a_D <= 0:
        raise ValueError("a_D must be > 0")
    f = np.asarray(f, dtype=float)
    peak = SQRT_LN2_OVER_PI / a_D
    out = peak * np.exp(-((f - line_center) ** 2) * LN2 / a_D**2)
    return out if out.ndim else float(out)


def absorption_cross_section(line: SpectralLine, T: float, f, partition: PartitionModel):
    """sigma(f) = S(T) * F(f), in m^2 per molecule."""
    s = line_intensity_at(line, T, partition)
    a_d = doppler_halfwidth(line, T)
    return s * gaussian_line_shape(f, line.center_frequency, a_d)


def molecular_volume_density(atm: AtmosphereState, molecule_id: int, isotopologue_id: int) -> float:
    """Number density of one species from the ideal gas law, 1/m^3."""
    key = (molecule_id, isotopologue_id)
    if key not in atm.composition:
        raise KeyError(f"species {key} not in atmosphere composition")
    q = atm.composition[key]
    return atm.pressure / (GAS_CONSTANT * atm.temperature) * q * AVOGADRO


def absorption_coefficient(
    atm: AtmosphereState,
    catalog,
    f: float,
    partition: PartitionModel,
    wing_cutoff: float = DEFAULT_WING_CUTOFF,
) -> float:
    """Total absorption coefficient k(f) in 1/m.

    Sums (p/p0) * (T_STP/T) * Q * sigma(f) over catalog lines whose center
    lies within ``wing_cutoff`` Doppler half-widths of f.  Lines of species
    absent from the composition contribute nothing.
    """
    if f <= 0:
        raise ValueError("frequency must be > 0")
    scale = (atm.pressure / P_STANDARD) * (T_STP / atm.temperature)
    total = 0.0
    for line in catalog:
        key = (line.molecule_id, line.isotopologue_id)
        if key not in atm.composition:
            continue
        a_d = doppler_halfwidth(line, atm.temperature)
        if abs(f - line.center_frequency) > wing_cutoff * a_d:
            continue
        q_density = molecular_volume_density(atm, *key)
        total += scale * q_density * absorption_cross_section(line, atm.temperature, f, partition)
    return total


def beer_lambert_loss(k: float, d: float):
    """Beer-Lambert loss over a path of length d (m): (factor, dB).

    factor = e^(k d) >= 1; per-km form is k * 1e4 * log10(e) dB/km.
    """
    if k < 0 or d < 0:
        raise ValueError("k and d must be >= 0")
    loss_db = 10.0 * LOG10_E * k * d
    return math.exp(k * d), loss_db


def absorption_db_per_km(k: float) -> float:
    """Molecular absorption in dB/km for coefficient k in 1/m."""
    return k * DB_PER_KM_PER_INV_M
