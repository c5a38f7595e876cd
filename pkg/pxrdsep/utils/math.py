import numpy as np


def angle_between(vec1, vec2, deg=True):
    """
    Angle between vectors along the last axis, e.g. between scattering
    vectors and a preferred-orientation axis.

    Uses the arctan2 form, which stays accurate for nearly parallel and
    nearly antiparallel vectors.

    Parameters
    ----------
    vec1, vec2 : array
        Broadcastable batches of vectors
    deg : bool (optional)
        Return degrees (default) instead of radians

    Returns
    -------
    np.ndarray
        Angles with the broadcast leading shape of the inputs
    """
    v1 = vec1 / np.linalg.norm(vec1, axis=-1)[..., None]
    v2 = vec2 / np.linalg.norm(vec2, axis=-1)[..., None]
    x1 = np.linalg.norm(v1 - v2, axis=-1)
    x2 = np.linalg.norm(v1 + v2, axis=-1)
    alpha = 2.0 * np.arctan2(x1, x2)
    if deg:
        return np.rad2deg(alpha)
    return alpha


def reciprocal_cartesian(H, Gstar):
    """
    Map Miller indices to Cartesian reciprocal vectors.

    Uses the Cholesky factor of the reciprocal metric so that dot products
    of the returned vectors equal ``h @ G* @ h'``.

    Parameters
    ----------
    H : array
        n x 3 array of Miller indices (or a single triple)
    Gstar : np.ndarray
        3x3 reciprocal metric tensor

    Returns
    -------
    np.ndarray
        Array of Cartesian vectors in Å⁻¹ with the shape of ``H``
    """
    return np.asarray(H, dtype=np.float64) @ np.linalg.cholesky(Gstar)
