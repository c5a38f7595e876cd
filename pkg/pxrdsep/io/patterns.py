import os

import msgpack
import numpy as np
import pandas as pd

from pxrdsep.errors import CorruptPatternFile, EmptyInput, GridMismatch
from pxrdsep.io.common import atomic_write_bytes
from pxrdsep.pattern import GRID_TOLERANCE, DiffractionPattern

PATTERN_MAGIC = "PXRDSEP-PATTERN"
PATTERN_VERSION = 1
BINARY_SUFFIX = ".pxp"


def pattern_to_bytes(pattern):
    """
    Encode a pattern as ``[magic, version, grid_min, step, L, payload]``.

    The payload is the little-endian float64 intensity vector.
    """
    payload = np.ascontiguousarray(pattern.intensities, dtype="<f8").tobytes()
    return msgpack.packb(
        [
            PATTERN_MAGIC,
            PATTERN_VERSION,
            pattern.grid_min,
            pattern.grid_step,
            len(pattern),
            payload,
        ],
        use_bin_type=True,
    )


def pattern_from_bytes(data):
    """
    Decode the output of :func:`pattern_to_bytes`.

    Raises
    ------
    CorruptPatternFile
        If the header, version or payload length is wrong
    """
    try:
        pack = msgpack.unpackb(data, raw=False)
        magic, version, grid_min, step, length, payload = pack
    except (ValueError, TypeError, msgpack.exceptions.ExtraData) as err:
        raise CorruptPatternFile("Data do not appear to be a pxrdsep pattern") from err
    if magic != PATTERN_MAGIC:
        raise CorruptPatternFile(f"Bad pattern magic: {magic!r}")
    if version != PATTERN_VERSION:
        raise CorruptPatternFile(f"Unsupported pattern version: {version}")
    if len(payload) != 8 * length:
        raise CorruptPatternFile(
            f"Pattern payload holds {len(payload)} bytes, expected {8 * length}"
        )
    intensities = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    try:
        return DiffractionPattern(grid_min, step, intensities)
    except ValueError as err:
        raise CorruptPatternFile(f"Invalid pattern contents: {err}") from err


def write_pattern_binary(pattern, path):
    atomic_write_bytes(path, pattern_to_bytes(pattern))


def read_pattern_binary(path):
    with open(path, "rb") as f:
        return pattern_from_bytes(f.read())


def write_pattern_text(pattern, path, header=None):
    """
    Write a two-column (2θ, intensity) text file.

    Values are written with 17 significant digits so that reading the file
    reproduces the pattern exactly.

    Parameters
    ----------
    pattern : DiffractionPattern
    path : str or path object
    header : str (optional)
        Text written as leading ``#`` comment lines
    """
    with open(path, "w") as f:
        if header:
            for line in header.splitlines():
                f.write(f"# {line}\n")
        pattern.to_frame().to_csv(
            f, sep=" ", header=False, index=False, float_format="%.17g"
        )


def read_two_column(path):
    """
    Read raw (angle, intensity) pairs from a whitespace-separated text file.

    Lines starting with ``#`` are ignored.

    Returns
    -------
    angles, intensities : np.ndarray

    Raises
    ------
    EmptyInput
        If the file holds no data rows
    """
    try:
        df = pd.read_csv(path, sep=r"\s+", comment="#", header=None)
    except pd.errors.EmptyDataError as err:
        raise EmptyInput(f"No data in {path}") from err
    if df.shape[0] == 0 or df.shape[1] < 2:
        raise EmptyInput(f"Expected two data columns in {path}")
    return df[0].to_numpy(np.float64), df[1].to_numpy(np.float64)


def read_pattern_text(path):
    """
    Read a two-column text file whose angles lie on a uniform grid.

    Raises
    ------
    GridMismatch
        If the angles are not equally spaced
    """
    angles, intensities = read_two_column(path)
    if len(angles) == 1:
        raise GridMismatch(f"Cannot infer grid step from one point in {path}")
    steps = np.diff(angles)
    step = (angles[-1] - angles[0]) / (len(angles) - 1)
    if np.any(np.abs(steps - step) > 1e-6 * max(step, GRID_TOLERANCE)):
        raise GridMismatch(f"Angles in {path} are not uniformly spaced")
    return DiffractionPattern(angles[0], step, intensities)


def read_pattern(path):
    """Read a pattern file, choosing the format from the suffix"""
    if os.fspath(path).endswith(BINARY_SUFFIX):
        return read_pattern_binary(path)
    return read_pattern_text(path)


def write_pattern(pattern, path):
    """Write a pattern file, choosing the format from the suffix"""
    if os.fspath(path).endswith(BINARY_SUFFIX):
        write_pattern_binary(pattern, path)
    else:
        write_pattern_text(pattern, path)
