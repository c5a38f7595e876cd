import numpy as np
import pandas as pd

from pxrdsep.errors import EmptyRange, NonPositiveInput
from pxrdsep.structure import Reflection
from pxrdsep.utils.cell import compute_dHKL, generate_reciprocal_cell, hkl_limit
from pxrdsep.utils.symmetry import compute_multiplicity, family_key


def _check_range(wavelength, two_theta_range):
    lo, hi = (float(v) for v in two_theta_range)
    if not 0.0 < lo < hi < 180.0:
        raise EmptyRange(
            f"Cannot enumerate reflections over 2θ range: ({lo}, {hi}). "
            "Expected 0 < min < max < 180."
        )
    if not wavelength > 0.0:
        raise NonPositiveInput(f"Wavelength must be positive: {wavelength}")
    return lo, hi


def enumerate_reflections(structure, wavelength, two_theta_range):
    """
    Enumerate symmetry-distinct reflection families within a 2θ window.

    Miller indices are drawn from the box ``|h|,|k|,|l| ≤ ceil(2·max(a,b,c)/λ)``,
    filtered by Bragg's law and the requested window, and grouped into
    families under the rotation parts of ``structure.symmetry_ops``.

    Parameters
    ----------
    structure : CrystalStructure
        Structure providing the lattice and point group
    wavelength : float
        X-ray wavelength in Å
    two_theta_range : tuple of float
        (min, max) scattering angle in degrees, inclusive

    Returns
    -------
    reflections : list of Reflection
        One entry per family, sorted ascending by two_theta

    Raises
    ------
    EmptyRange
        If the 2θ window is empty or outside (0°, 180°)
    """
    lo, hi = _check_range(wavelength, two_theta_range)
    lattice = structure.lattice

    H = generate_reciprocal_cell(lattice, hkl_limit(lattice, wavelength))
    d = compute_dHKL(H, lattice)

    # Reject planes closer than the window allows before the sin check
    dmin = wavelength / (2.0 * np.sin(np.deg2rad(hi / 2.0)))
    keep = d >= dmin * (1.0 - 1e-12)
    H, d = H[keep], d[keep]

    sin_theta = wavelength / (2.0 * d)
    valid = sin_theta <= 1.0
    H, d, sin_theta = H[valid], d[valid], sin_theta[valid]
    two_theta = 2.0 * np.rad2deg(np.arcsin(sin_theta))
    in_range = (two_theta >= lo) & (two_theta <= hi)
    H = H[in_range]
    if len(H) == 0:
        return []

    ops = structure.point_group
    families = np.unique(family_key(H, ops), axis=0)
    d = compute_dHKL(families, lattice)
    two_theta = 2.0 * np.rad2deg(np.arcsin(wavelength / (2.0 * d)))
    mult = compute_multiplicity(families, ops)

    order = np.lexsort((families[:, 2], families[:, 1], families[:, 0], two_theta))
    return [
        Reflection(
            tuple(int(i) for i in families[j]),
            float(d[j]),
            float(two_theta[j]),
            int(mult[j]),
        )
        for j in order
    ]


def reflections_to_frame(reflections):
    """
    Tabulate reflections as a DataFrame with columns H, K, L, d, TwoTheta
    and Multiplicity.
    """
    if len(reflections) == 0:
        return pd.DataFrame(columns=["H", "K", "L", "d", "TwoTheta", "Multiplicity"])
    hkl = np.array([r.hkl for r in reflections])
    return pd.DataFrame(
        {
            "H": hkl[:, 0],
            "K": hkl[:, 1],
            "L": hkl[:, 2],
            "d": [r.d_spacing for r in reflections],
            "TwoTheta": [r.two_theta for r in reflections],
            "Multiplicity": [r.multiplicity for r in reflections],
        }
    )
