"""Physical constants (CODATA 2018) and reference conditions.

Every module pulls constants from here so unit conventions stay in one place.
"""

import math

# CODATA 2018 exact values
SPEED_OF_LIGHT = 2.99792458e8          # m/s
PLANCK = 6.62607015e-34                # J s
BOLTZMANN = 1.380649e-23               # J/K
AVOGADRO = 6.02214076e23               # 1/mol
GAS_CONSTANT = AVOGADRO * BOLTZMANN    # J/(mol K)

# Second radiation constant h*c/k_B expressed per cm^-1 (cm K).
C2_CM_K = PLANCK * SPEED_OF_LIGHT * 100.0 / BOLTZMANN

# Spectroscopy reference conditions
T_REF = 296.0          # K, catalog reference temperature
P_STANDARD = 101325.0  # Pa
T_STP = 273.15         # K

# HITRAN line intensities arrive in cm^-1/(molecule cm^-2); multiplying by
# this factor yields Hz m^2 per molecule so that sigma * number density
# gives an absorption coefficient in 1/m.
HITRAN_INTENSITY_TO_SI = SPEED_OF_LIGHT * 1e-2

LOG10_E = math.log10(math.e)

# dB/km produced by an absorption coefficient k in 1/m over one km:
# 10*log10(e^(k*1000)) = k * 1e4 * log10(e)
DB_PER_KM_PER_INV_M = 1e4 * LOG10_E


def wavelength(frequency_hz: float) -> float:
    """Free-space wavelength in meters."""
    return SPEED_OF_LIGHT / frequency_hz
