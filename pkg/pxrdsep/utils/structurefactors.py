import numpy as np

from pxrdsep.utils.elements import form_factor_coefficients


def form_factor(element, q_mag):
    """
    Atomic X-ray form factor from the four-Gaussian parameterization.

    ``f(Q) = Σ a_i exp(-b_i (Q/4π)²) + c`` where ``Q/4π = sinθ/λ``.

    Parameters
    ----------
    element : str
        Chemical symbol
    q_mag : float or array
        Momentum transfer magnitude in Å⁻¹

    Returns
    -------
    f : float or np.ndarray
        Form factor with the same shape as ``q_mag``

    Raises
    ------
    UnsupportedElement
        If the symbol is not in the coefficient table
    ValueError
        If any ``q_mag`` is negative
    """
    a, b, c = form_factor_coefficients(element)
    q = np.asarray(q_mag, dtype=np.float64)
    if np.any(q < 0.0):
        raise ValueError(f"Cannot evaluate form factor at negative Q: {q_mag}")
    s2 = (q / (4.0 * np.pi)) ** 2
    f = np.exp(-np.multiply.outer(s2, b)) @ a + c
    return float(f) if np.ndim(f) == 0 else f


def structure_factors(structure, H, q_mag, debye_M=None):
    """
    Compute complex structure factors for many reflections at once.

    ``F(h) = Σ_j occ_j f_j(Q) exp(-M_j) exp(2πi h·x_j)``

    Parameters
    ----------
    structure : CrystalStructure
        Fully expanded structure
    H : array
        n x 3 array of Miller indices
    q_mag : array
        Length n array of momentum transfer magnitudes in Å⁻¹
    debye_M : array (optional)
        n x n_sites array of per-atom temperature exponents. If None,
        no per-atom damping is applied.

    Returns
    -------
    F : np.ndarray(complex128)
        Length n array of structure factors
    """
    H = np.atleast_2d(np.asarray(H, dtype=np.float64))
    q = np.atleast_1d(np.asarray(q_mag, dtype=np.float64))
    elements = structure.elements
    occ = structure.occupancies

    # Evaluate each distinct element once
    f = np.empty((len(q), len(elements)))
    for element in set(elements):
        cols = [i for i, e in enumerate(elements) if e == element]
        f[:, cols] = np.atleast_1d(form_factor(element, q))[:, None]

    amplitude = f * occ
    if debye_M is not None:
        amplitude = amplitude * np.exp(-np.asarray(debye_M))

    phase = 2.0 * np.pi * H @ structure.frac_coords.T
    return np.sum(amplitude * np.exp(1j * phase), axis=-1)


def structure_factor(structure, hkl, q_mag, debye_M=None):
    """
    Complex structure factor of a single reflection.

    Parameters
    ----------
    structure : CrystalStructure
        Fully expanded structure
    hkl : tuple of int
        Miller indices
    q_mag : float
        Momentum transfer magnitude in Å⁻¹
    debye_M : array (optional)
        Per-atom temperature exponents

    Returns
    -------
    F : complex
    """
    if debye_M is not None:
        debye_M = np.atleast_2d(debye_M)
    return complex(structure_factors(structure, [hkl], [q_mag], debye_M)[0])
