"""Martian dust-storm sensing from THz link attenuation.

Physics (dust and molecular attenuation), measurement synthesis over a
surface link network, correlation-based storm detection, intensity
inversion, spatial interpolation, and metric evaluation, with a CLI for
end-to-end scenario runs.
"""

__version__ = "0.1.0"
