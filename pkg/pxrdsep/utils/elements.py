from functools import lru_cache

import gemmi
import numpy as np

from pxrdsep.errors import UnsupportedElement


@lru_cache(maxsize=None)
def _lookup(symbol):
    try:
        element = gemmi.Element(symbol)
    except (RuntimeError, ValueError, TypeError):
        return None
    if element.atomic_number <= 0 or element.name.lower() != symbol.lower():
        return None
    it92 = element.it92
    if it92 is None:
        return None
    coefs = np.asarray(it92.get_coefs(), dtype=np.float64)
    if coefs.shape != (9,) or coefs[:4].sum() + coefs[8] <= 0.0:
        return None
    return element.atomic_number, float(element.weight), coefs


def is_supported_element(symbol):
    """Whether a chemical symbol has tabulated form-factor coefficients"""
    return _lookup(str(symbol)) is not None


def form_factor_coefficients(symbol):
    """
    Four-Gaussian form-factor coefficients for an element.

    Parameters
    ----------
    symbol : str
        Chemical symbol, e.g. "Fe"

    Returns
    -------
    a : np.ndarray
        Gaussian amplitudes (length 4)
    b : np.ndarray
        Gaussian widths in Å² (length 4)
    c : float
        Constant term

    Raises
    ------
    UnsupportedElement
        If the symbol is not in the coefficient table
    """
    entry = _lookup(str(symbol))
    if entry is None:
        raise UnsupportedElement(
            f"No form-factor coefficients for element: {symbol!r}. "
            "Supported symbols are the IT92 elements H through Cf."
        )
    coefs = entry[2]
    return coefs[:4], coefs[4:8], float(coefs[8])


def atomic_number(symbol):
    entry = _lookup(str(symbol))
    if entry is None:
        raise UnsupportedElement(f"Unknown element: {symbol!r}")
    return entry[0]


def atomic_mass(symbol):
    """Standard atomic weight in amu"""
    entry = _lookup(str(symbol))
    if entry is None:
        raise UnsupportedElement(f"Unknown element: {symbol!r}")
    return entry[1]
