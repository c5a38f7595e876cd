import numpy as np

from pxrdsep.errors import DegenerateInput, LengthMismatch


def weighted_pearsonr(x, y, w):
    """
    Weighted Pearson correlation along the last axis.

    Leading dimensions broadcast, so a stack of patterns can be scored
    against a stack of references in one call. Weights need not sum to one.

    Parameters
    ----------
    x, y : np.ndarray
        Observations of matching shape
    w : np.ndarray
        Non-negative weights of the same shape

    Returns
    -------
    r : np.ndarray or float
        Coefficients of shape ``x.shape[:-1]``; NaN where either input is
        constant under the weights
    """
    z = np.reciprocal(w.sum(-1))

    mx = z * np.einsum("...a,...a->...", w, x)
    my = z * np.einsum("...a,...a->...", w, y)

    dx = x - np.expand_dims(mx, axis=-1)
    dy = y - np.expand_dims(my, axis=-1)

    cxy = z * np.einsum("...a,...a,...a->...", w, dx, dy)
    cx = z * np.einsum("...a,...a,...a->...", w, dx, dx)
    cy = z * np.einsum("...a,...a,...a->...", w, dy, dy)

    with np.errstate(divide="ignore", invalid="ignore"):
        r = cxy / np.sqrt(cx * cy)
    return r


def pearson(a, b):
    """
    Pearson correlation coefficient of two patterns.

    Parameters
    ----------
    a, b : array
        Vectors of equal length ≥ 2

    Returns
    -------
    r : float
        Coefficient clipped to [-1, 1], or ``np.nan`` when exactly one of the
        inputs is constant

    Raises
    ------
    LengthMismatch
        If the lengths differ or are below 2
    DegenerateInput
        If both inputs are constant
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or len(a) < 2:
        raise LengthMismatch(
            f"Cannot correlate vectors of shapes {a.shape} and {b.shape}"
        )
    const_a = np.ptp(a) == 0.0
    const_b = np.ptp(b) == 0.0
    if const_a and const_b:
        raise DegenerateInput("Cannot correlate two constant vectors")
    if const_a or const_b:
        return np.nan
    r = weighted_pearsonr(a, b, np.ones_like(a))
    return float(np.clip(r, -1.0, 1.0))
