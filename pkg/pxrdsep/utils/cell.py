import numpy as np

from pxrdsep.decorators import latticeify
from pxrdsep.errors import DegenerateCell

# Cells with a smaller volume (Å³) are treated as degenerate
MIN_VOLUME = 1e-6


@latticeify
def reciprocal_metric(lattice):
    """
    Compute the reciprocal metric tensor G* of a lattice.

    For Miller indices h, ``1/d² = h @ G* @ h``.

    Parameters
    ----------
    lattice : Lattice, tuple, list, np.ndarray of cell parameters, or gemmi.UnitCell
        Unit cell parameters

    Returns
    -------
    Gstar : np.ndarray
        3x3 symmetric positive-definite tensor in Å⁻²

    Raises
    ------
    DegenerateCell
        If the cell volume is below 1e-6 Å³
    """
    if lattice.volume < MIN_VOLUME:
        raise DegenerateCell(f"Cell volume {lattice.volume} Å³ is degenerate")
    Gstar = np.linalg.inv(lattice.metric_tensor)
    # Symmetrize away round-off from the inversion
    return 0.5 * (Gstar + Gstar.T)


@latticeify
def compute_dHKL(H, lattice):
    """
    Compute the real space lattice plane spacing, d, associated with
    miller indices and cell.

    Parameters
    ----------
    H : array
        An nx3 array of numerical miller indices.
    lattice : Lattice, tuple, list, np.ndarray of cell parameters, or gemmi.UnitCell
        Unit cell parameters

    Returns
    -------
    dHKL : array
        Array of floating point d spacings in Å.
    """
    H = np.atleast_2d(np.asarray(H, dtype=np.float64))
    Gstar = reciprocal_metric(lattice)
    inv_d2 = np.einsum("ni,ij,nj->n", H, Gstar, H)
    with np.errstate(divide="ignore"):
        return np.reciprocal(np.sqrt(inv_d2))


@latticeify
def hkl_limit(lattice, wavelength):
    """
    Bound on |h|, |k|, |l| sufficient for every reflection with sinθ ≤ 1.

    Returns ``ceil(2 * max(a, b, c) / wavelength)``.
    """
    return int(np.ceil(2.0 * max(lattice.a, lattice.b, lattice.c) / wavelength))


@latticeify
def generate_reciprocal_cell(lattice, hmax, dtype=np.int32):
    """
    Generate the miller indices of the box |h|, |k|, |l| ≤ hmax, excluding 0,0,0.

    Parameters
    ----------
    lattice : Lattice, tuple, list, np.ndarray of cell parameters, or gemmi.UnitCell
        Unit cell parameters
    hmax : int
        Largest absolute index along each axis
    dtype : np.dtype (optional)
        The data type of the returned array. The default is np.int32.

    Returns
    -------
    hkl : np.ndarray
        n x 3 array of Miller indices
    """
    r = np.arange(-hmax, hmax + 1, dtype=dtype)
    hkl = np.stack(np.meshgrid(r, r, r, indexing="ij")).reshape((3, -1)).T

    # Remove reflection 0,0,0
    return hkl[np.any(hkl != 0, axis=1)]
