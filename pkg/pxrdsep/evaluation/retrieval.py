import logging
from dataclasses import dataclass
from typing import Tuple

import msgpack
import numpy as np

from pxrdsep.errors import (
    CorruptPatternFile,
    DegenerateInput,
    EmptyIndex,
    IncompatibleGrid,
)
from pxrdsep.io.common import atomic_write_bytes, pack_array, unpack_array
from pxrdsep.pattern import DiffractionPattern, Grid
from pxrdsep.utils.stats import pearson

logger = logging.getLogger("ps.evaluation")

INDEX_MAGIC = "PXRDSEP-INDEX"
INDEX_VERSION = 1
RERANK_WINDOW = 0.1
DEFAULT_CANDIDATES = 64


@dataclass(frozen=True)
class RetrievalIndex:
    """
    Unit-norm reference vectors for phase identification.

    Attributes
    ----------
    ids : tuple of str
        Reference ids in row order
    vectors : np.ndarray
        (n, L) reference patterns scaled to unit Euclidean norm
    grid : Grid
        Grid shared by all references
    candidates : int
        Default number M of cosine candidates passed to the rerank
    """

    ids: Tuple[str, ...]
    vectors: np.ndarray
    grid: Grid
    candidates: int = DEFAULT_CANDIDATES

    def __len__(self):
        return len(self.ids)


def _unit(values, name):
    values = np.asarray(values, dtype=np.float64)
    norm = np.linalg.norm(values, axis=-1, keepdims=True)
    if np.any(norm == 0.0):
        raise DegenerateInput(f"Cannot index an all-zero pattern: {name}")
    return values / norm


def build_index(library, candidates=DEFAULT_CANDIDATES):
    """
    Build a retrieval index from a reference library.

    Parameters
    ----------
    library : ReferenceLibrary
        References sharing one grid
    candidates : int
        Default cosine shortlist size M

    Returns
    -------
    RetrievalIndex
    """
    ids = library.ids
    if len(ids) == 0:
        raise EmptyIndex("Cannot build an index without references")
    vectors = np.stack([_unit(library[i].intensities, i) for i in ids])
    return RetrievalIndex(tuple(ids), vectors, library.grid, int(candidates))


def _query_values(query, index):
    if isinstance(query, DiffractionPattern):
        if not query.grid.is_compatible(index.grid):
            raise IncompatibleGrid(
                f"Query grid {query.grid} differs from index grid {index.grid}"
            )
        query = query.intensities
    values = np.asarray(query, dtype=np.float64)
    if values.shape != (index.grid.length,):
        raise IncompatibleGrid(
            f"Query of shape {values.shape} does not fit index grid {index.grid}"
        )
    return values


def aligned_pearson(query, reference, max_shift):
    """
    Best Pearson correlation over integer shifts within ``±max_shift`` steps,
    computed on the overlapping part of the two patterns.
    """
    n = len(query)
    best = -np.inf
    for s in range(-max_shift, max_shift + 1):
        if s >= 0:
            a, b = query[s:], reference[: n - s]
        else:
            a, b = query[: n + s], reference[-s:]
        if np.ptp(a) == 0.0 or np.ptp(b) == 0.0:
            continue
        best = max(best, pearson(a, b))
    return best


def retrieve_scored(query, index, M=None, k=10):
    """
    Two-stage retrieval returning (id, rerank score) pairs.

    Stage one ranks all references by cosine similarity and keeps the top
    ``M``. Stage two reorders those by the shift-aligned Pearson correlation
    within ±0.1° and returns the best ``k``. Ties keep the cosine order.
    """
    if len(index) == 0:
        raise EmptyIndex("Cannot retrieve from an empty index")
    M = index.candidates if M is None else int(M)
    if k < 1 or M < k:
        raise ValueError(f"Need 1 <= k <= M, got k={k}, M={M}")
    values = _query_values(query, index)
    if not np.any(values):
        raise DegenerateInput("Cannot retrieve with an all-zero query")

    cosine = index.vectors @ (values / np.linalg.norm(values))
    shortlist = np.argsort(-cosine, kind="stable")[:M]

    max_shift = int(round(RERANK_WINDOW / index.grid.step))
    scores = np.array(
        [aligned_pearson(values, index.vectors[j], max_shift) for j in shortlist]
    )
    order = np.argsort(-scores, kind="stable")[:k]
    return [(index.ids[shortlist[i]], float(scores[i])) for i in order]


def retrieve_topk(query, index, M=None, k=10):
    """
    Ranked reference ids most similar to ``query``.

    Parameters
    ----------
    query : DiffractionPattern or array
        Pattern on the index grid
    index : RetrievalIndex
        References to search
    M : int (optional)
        Cosine shortlist size, defaults to ``index.candidates``
    k : int
        Number of ids to return

    Returns
    -------
    list of str

    Raises
    ------
    EmptyIndex
        If the index holds no references
    IncompatibleGrid
        If the query is not on the index grid
    """
    return [i for i, _ in retrieve_scored(query, index, M, k)]


def index_to_bytes(index):
    return msgpack.packb(
        {
            "magic": INDEX_MAGIC,
            "version": INDEX_VERSION,
            "grid": [index.grid.grid_min, index.grid.step, index.grid.length],
            "ids": list(index.ids),
            "vectors": pack_array(index.vectors),
            "candidates": index.candidates,
        },
        use_bin_type=True,
    )


def index_from_bytes(data):
    try:
        payload = msgpack.unpackb(data, raw=False)
        if payload["magic"] != INDEX_MAGIC:
            raise CorruptPatternFile(f"Bad index magic: {payload['magic']!r}")
        if payload["version"] != INDEX_VERSION:
            raise CorruptPatternFile(f"Unsupported index version: {payload['version']}")
        grid_min, step, length = payload["grid"]
        return RetrievalIndex(
            ids=tuple(payload["ids"]),
            vectors=unpack_array(payload["vectors"]).astype(np.float64),
            grid=Grid(grid_min, step, int(length)),
            candidates=int(payload["candidates"]),
        )
    except CorruptPatternFile:
        raise
    except (KeyError, TypeError, ValueError, msgpack.exceptions.ExtraData) as err:
        raise CorruptPatternFile(f"Data do not appear to be an index: {err}") from err


def write_index(index, path):
    atomic_write_bytes(path, index_to_bytes(index))
    logger.debug(f"Wrote retrieval index of {len(index)} references to {path}")


def read_index_file(path):
    with open(path, "rb") as f:
        return index_from_bytes(f.read())
