import numpy as np
import pytest


def make_par_record(
    molecule_id: int,
    isotopologue_id: int,
    wavenumber: float,
    intensity: float,
    e_lower: float,
) -> str:
    """Build one fixed-width 160-character catalog record (2004 .par layout)."""
    parts = [
        f"{molecule_id:2d}",
        f"{isotopologue_id:1d}",
        f"{wavenumber:12.6f}",
        f"{intensity:10.3E}",
        f"{1.0e-3:10.3E}",   # Einstein A, unused
        "0.070",             # air-broadened halfwidth, unused
        "0.090",             # self-broadened halfwidth, unused
        f"{e_lower:10.4f}",
        "0.75",              # temperature exponent, unused
        "0.000000",          # pressure shift, unused
    ]
    return "".join(parts).ljust(160)


# Five CO2 lines bracketing 1 THz (wavenumbers in cm^-1)
FIXTURE_LINES = [
    (2, 1, 33.000000, 1.2e-22, 150.0),
    (2, 1, 33.200000, 5.0e-23, 80.0),
    (2, 1, 33.356400, 3.1e-22, 100.0),
    (2, 1, 33.500000, 8.8e-23, 210.0),
    (2, 1, 33.700000, 2.0e-22, 55.0),
]


@pytest.fixture
def co2_catalog_text():
    return "\n".join(make_par_record(*row) for row in FIXTURE_LINES) + "\n"


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
