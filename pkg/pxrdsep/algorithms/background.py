import numpy as np
from numpy.polynomial import polynomial

from pxrdsep.decorators import rngify
from pxrdsep.errors import NegativeInput
from pxrdsep.pattern import DiffractionPattern

# Default number of SNIP clipping iterations (grid steps)
SNIP_ITERATIONS = 24


def _llsq(y):
    return np.log(np.log(np.sqrt(y + 1.0) + 1.0) + 1.0)


def _inverse_llsq(v):
    return (np.exp(np.exp(v) - 1.0) - 1.0) ** 2 - 1.0


def snip_background(pattern, iterations=SNIP_ITERATIONS, decreasing=False):
    """
    Estimate a slowly varying background with the SNIP clipping filter.

    Intensities are compressed with ``v = log(log(√(y+1)+1)+1)``; for each
    window half-width m = 1..M every point is replaced by
    ``min(v[i], (v[i−m] + v[i+m]) / 2)`` with indices clamped at the edges.
    The result is mapped back and clipped to the input.

    Parameters
    ----------
    pattern : DiffractionPattern or array
        Non-negative intensities
    iterations : int
        Largest window half-width M (in grid steps)
    decreasing : bool
        Run the windows from M down to 1 instead

    Returns
    -------
    np.ndarray
        Background with ``background <= pattern`` pointwise

    Raises
    ------
    NegativeInput
        If any intensity is negative
    """
    if isinstance(pattern, DiffractionPattern):
        y = pattern.intensities
    else:
        y = np.asarray(pattern, dtype=np.float64)
    if np.any(y < 0.0):
        raise NegativeInput("SNIP requires non-negative intensities")
    if iterations < 1:
        raise ValueError(f"SNIP needs at least one iteration: {iterations}")

    v = _llsq(y)
    idx = np.arange(len(y))
    last = len(y) - 1
    windows = range(1, iterations + 1)
    if decreasing:
        windows = reversed(windows)
    for m in windows:
        left = v[np.clip(idx - m, 0, last)]
        right = v[np.clip(idx + m, 0, last)]
        v = np.minimum(v, 0.5 * (left + right))
    return np.minimum(_inverse_llsq(v), y)


@rngify
def polynomial_background(length, order, amplitude, rng=None):
    """
    Random non-negative polynomial background.

    Coefficients are drawn uniformly from [-1, 1] on the reduced abscissa
    u ∈ [-1, 1]; the curve is offset so its minimum is zero and scaled so
    its maximum equals ``amplitude``.

    Parameters
    ----------
    length : int
        Number of grid points
    order : int
        Polynomial degree
    amplitude : float
        Maximum of the returned background
    rng : np.random.Generator, int or None
        Random source

    Returns
    -------
    np.ndarray
    """
    coefs = rng.uniform(-1.0, 1.0, size=order + 1)
    u = np.linspace(-1.0, 1.0, length)
    bg = polynomial.polyval(u, coefs)
    bg -= bg.min()
    top = bg.max()
    if top <= 0.0 or amplitude <= 0.0:
        return np.zeros(length)
    return bg * (amplitude / top)
