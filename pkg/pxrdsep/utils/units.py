import numpy as np
from scipy.constants import Avogadro, Boltzmann, Planck, c, electron_volt

_conversion_factor = Planck * c / 1e-10 / electron_volt

# Cu Kα1 wavelength in Å
CU_KALPHA = 1.5406

# One atomic mass unit in kg
AMU = 1e-3 / Avogadro

# Planck and Boltzmann constants in SI
PLANCK = Planck
BOLTZMANN = Boltzmann


def eV2Angstroms(ev):
    """Convert photon energy in eV to wavelength in Å"""
    ev = np.asarray(ev, dtype=np.float64)
    out = np.empty_like(ev)
    np.divide(_conversion_factor, ev, out=out)
    return out if out.ndim else float(out)


def nm2Angstroms(nm):
    return 10.0 * np.asarray(nm, dtype=np.float64)
