import logging
import os
import re
from types import MappingProxyType

import numpy as np
import pandas as pd

from pxrdsep.algorithms.background import SNIP_ITERATIONS, snip_background
from pxrdsep.algorithms.simulate import structure_key
from pxrdsep.errors import (
    CorruptPatternFile,
    EmptyInput,
    GridMismatch,
    NonMonotonicAngles,
)
from pxrdsep.io.patterns import BINARY_SUFFIX, read_pattern_binary, write_pattern_binary
from pxrdsep.pattern import DiffractionPattern

logger = logging.getLogger("ps.mixing")

INDEX_FILE = "index.csv"
INDEX_COLUMNS = ["id", "render", "file", "grid_min", "step", "length"]


class ReferenceLibrary:
    """
    Single-phase reference patterns keyed by crystal id.

    Every entry shares one grid and is normalized to a maximum of 1.

    Parameters
    ----------
    patterns : dict
        Crystal id -> DiffractionPattern
    normalize : bool
        Rescale each pattern to maximum 1 on construction
    """

    def __init__(self, patterns, normalize=True):
        if len(patterns) == 0:
            raise EmptyInput("Cannot build a reference library without patterns")
        items = sorted(patterns.items())
        grid = items[0][1].grid
        entries = {}
        for crystal_id, pattern in items:
            if not grid.is_compatible(pattern.grid):
                raise GridMismatch(
                    f"Pattern {crystal_id!r} is not on the library grid {grid}"
                )
            entries[str(crystal_id)] = pattern.normalized() if normalize else pattern
        self.grid = grid
        self._patterns = MappingProxyType(entries)

    def __len__(self):
        return len(self._patterns)

    def __contains__(self, crystal_id):
        return crystal_id in self._patterns

    def __getitem__(self, crystal_id):
        return self._patterns[crystal_id]

    def __repr__(self):
        return f"ReferenceLibrary(n={len(self)}, grid={self.grid})"

    @property
    def ids(self):
        return tuple(self._patterns)

    def items(self):
        return self._patterns.items()

    def subset(self, ids):
        """Library restricted to ``ids`` (e.g. one split)"""
        return ReferenceLibrary({i: self._patterns[i] for i in ids}, normalize=False)

    def matrix(self, ids=None):
        ids = self.ids if ids is None else ids
        return np.stack([self._patterns[i].intensities for i in ids])


def safe_filename(crystal_id):
    return re.sub(r"[^A-Za-z0-9_.-]", "_", str(crystal_id))


def write_render_set(directory, renders):
    """
    Write rendered patterns and their index into ``directory``.

    Parameters
    ----------
    directory : str or path object
        Output directory, created if missing
    renders : iterable of (crystal_id, render_index, DiffractionPattern)

    Returns
    -------
    pd.DataFrame
        The index written to ``index.csv``
    """
    os.makedirs(os.path.join(directory, "patterns"), exist_ok=True)
    rows = []
    for crystal_id, render, pattern in renders:
        name = f"{safe_filename(crystal_id)}_{render:03d}{BINARY_SUFFIX}"
        write_pattern_binary(pattern, os.path.join(directory, "patterns", name))
        rows.append(
            [
                crystal_id,
                render,
                f"patterns/{name}",
                pattern.grid_min,
                pattern.grid_step,
                len(pattern),
            ]
        )
    index = pd.DataFrame(rows, columns=INDEX_COLUMNS)
    index.to_csv(os.path.join(directory, INDEX_FILE), index=False, float_format="%.17g")
    return index


def read_index(directory):
    path = os.path.join(directory, INDEX_FILE)
    try:
        index = pd.read_csv(path, dtype={"id": str})
    except (FileNotFoundError, pd.errors.EmptyDataError) as err:
        raise CorruptPatternFile(f"Cannot read library index {path}") from err
    missing = set(INDEX_COLUMNS) - set(index.columns)
    if missing:
        raise CorruptPatternFile(f"Library index lacks columns {sorted(missing)}")
    return index


def choose_render(crystal_id, n_renders, seed):
    """Index of the render kept for ``crystal_id``; a pure function of its inputs"""
    rng = np.random.default_rng([int(seed), structure_key(crystal_id)])
    return int(rng.integers(n_renders))


def read_library(directory, seed=0, ids=None):
    """
    Build a ReferenceLibrary from a render set, keeping one render per crystal.

    Parameters
    ----------
    directory : str or path object
        Directory written by :func:`write_render_set`
    seed : int
        Seed of the render choice
    ids : iterable of str (optional)
        Restrict the library to these crystal ids

    Returns
    -------
    ReferenceLibrary
    """
    index = read_index(directory)
    if ids is not None:
        index = index[index["id"].isin(set(ids))]
    if len(index) == 0:
        raise EmptyInput(f"No library entries selected from {directory}")
    patterns = {}
    for crystal_id, group in index.groupby("id", sort=True):
        group = group.sort_values("render")
        row = group.iloc[choose_render(crystal_id, len(group), seed)]
        patterns[crystal_id] = read_pattern_binary(os.path.join(directory, row["file"]))
    logger.debug(f"Loaded {len(patterns)} reference patterns from {directory}")
    return ReferenceLibrary(patterns)


def resample_to_grid(angles, intensities, grid):
    """
    Interpolate irregular (angle, intensity) pairs onto a grid.

    Grid points outside the measured span are zero. The result is
    normalized to a maximum of 1; negative values are clipped first.

    Parameters
    ----------
    angles : array
        Strictly increasing angles in degrees
    intensities : array
        Intensities at ``angles``
    grid : Grid
        Target grid

    Returns
    -------
    DiffractionPattern

    Raises
    ------
    EmptyInput
        If no points are given
    NonMonotonicAngles
        If the angles are not strictly increasing
    """
    angles = np.asarray(angles, dtype=np.float64)
    intensities = np.asarray(intensities, dtype=np.float64)
    if len(angles) == 0:
        raise EmptyInput("Cannot resample an empty pattern")
    if angles.shape != intensities.shape:
        raise ValueError("Angles and intensities must have the same length")
    if np.any(np.diff(angles) <= 0.0):
        raise NonMonotonicAngles("Raw angles must be strictly increasing")
    values = np.interp(grid.two_theta, angles, intensities, left=0.0, right=0.0)
    return DiffractionPattern.on_grid(grid, np.maximum(values, 0.0)).normalized()


def preprocess_pattern(angles, intensities, grid, iterations=SNIP_ITERATIONS):
    """
    Prepare an experimental pattern: resample onto ``grid``, subtract the
    SNIP background and normalize to a maximum of 1.

    Returns
    -------
    (DiffractionPattern, np.ndarray)
        The processed pattern and the background on the grid (normalized
        with the same factor)
    """
    raw = resample_to_grid(angles, np.maximum(intensities, 0.0), grid)
    background = snip_background(raw, iterations)
    signal = DiffractionPattern.on_grid(grid, raw.intensities - background)
    top = signal.max()
    if top <= 0.0:
        return signal, background
    return signal.scaled(1.0 / top), background / top
