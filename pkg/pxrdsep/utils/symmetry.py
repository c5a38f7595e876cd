import numpy as np

from pxrdsep.structure import SymmetryOp


def _rotations(ops):
    """Stack rotation parts from SymmetryOps or raw 3x3 matrices"""
    mats = [op.R if isinstance(op, SymmetryOp) else np.asarray(op) for op in ops]
    if len(mats) == 0:
        return SymmetryOp.identity().R[None, ...]
    return np.stack(mats).astype(np.int64)


def hkl_images(H, ops):
    """
    All point-group images of each Miller index.

    Miller indices transform as row vectors, ``h' = h @ R``, so that the
    phase ``h · x`` is preserved under the real-space operator.

    Parameters
    ----------
    H : array
        n x 3 array of Miller indices
    ops : sequence of SymmetryOp or 3x3 arrays

    Returns
    -------
    images : np.ndarray(int64)
        n x g x 3 array where g is the number of rotations
    """
    H = np.atleast_2d(np.asarray(H, dtype=np.int64))
    return np.einsum("ni,gij->ngj", H, _rotations(ops))


def _encode(images, base):
    shifted = images + base // 2
    return (shifted[..., 0] * base + shifted[..., 1]) * base + shifted[..., 2]


def compute_multiplicity(H, ops):
    """
    Compute the powder multiplicity of each reflection in ``H``.

    The multiplicity is the number of point-group images of hkl that are
    distinct as integer triples. Only the rotation parts of ``ops`` are used;
    Friedel pairs are counted only if an inversion is among the operators.

    Parameters
    ----------
    H : array
        n x 3 array of Miller indices
    ops : sequence of SymmetryOp or 3x3 arrays

    Returns
    -------
    multiplicity : np.ndarray(int64)
        Length n array of multiplicities
    """
    images = hkl_images(H, ops)
    if images.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    base = 2 * int(np.abs(images).max()) + 3
    codes = np.sort(_encode(images, base), axis=1)
    distinct = 1 + np.count_nonzero(np.diff(codes, axis=1), axis=1)
    return distinct.astype(np.int64)


def family_key(H, ops):
    """
    Canonical representative of each symmetry-equivalent hkl family.

    The representative is the image whose integer encoding is largest, so
    every member of one orbit maps to the same triple.

    Parameters
    ----------
    H : array
        n x 3 array of Miller indices
    ops : sequence of SymmetryOp or 3x3 arrays

    Returns
    -------
    keys : np.ndarray(int64)
        n x 3 array of canonical Miller indices
    """
    images = hkl_images(H, ops)
    if images.shape[0] == 0:
        return np.zeros((0, 3), dtype=np.int64)
    base = 2 * int(np.abs(images).max()) + 3
    best = np.argmax(_encode(images, base), axis=1)
    return images[np.arange(len(images)), best]
