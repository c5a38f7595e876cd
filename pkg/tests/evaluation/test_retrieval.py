import numpy as np
import pytest

from pxrdsep.errors import CorruptPatternFile, DegenerateInput, IncompatibleGrid
from pxrdsep.evaluation import (
    aligned_pearson,
    build_index,
    read_index_file,
    retrieve_topk,
    write_index,
)
from pxrdsep.evaluation.retrieval import index_from_bytes, retrieve_scored
from pxrdsep.mixing.library import ReferenceLibrary
from pxrdsep.pattern import DiffractionPattern, Grid


@pytest.fixture
def index(gaussian_library):
    return build_index(gaussian_library, candidates=6)


def test_build_index(index, gaussian_library):
    assert len(index) == len(gaussian_library)
    assert index.ids == gaussian_library.ids
    assert np.allclose(np.linalg.norm(index.vectors, axis=1), 1.0)


@pytest.mark.parametrize("crystal_id", ["phase_0", "phase_3", "phase_5"])
def test_self_retrieval(index, gaussian_library, crystal_id):
    """Test that a reference retrieves itself first"""
    query = gaussian_library[crystal_id]
    assert retrieve_topk(query, index, k=3)[0] == crystal_id
    scaled = 0.3 * query.intensities
    ids_scores = retrieve_scored(scaled, index, M=6, k=6)
    assert ids_scores[0][0] == crystal_id
    assert ids_scores[0][1] == pytest.approx(1.0)
    scores = [s for _, s in ids_scores]
    assert scores == sorted(scores, reverse=True)


def test_retrieval_errors(index, gaussian_library):
    with pytest.raises(DegenerateInput):
        retrieve_topk(np.zeros(index.grid.length), index)
    with pytest.raises(IncompatibleGrid):
        retrieve_topk(np.ones(index.grid.length + 1), index)
    with pytest.raises(ValueError):
        retrieve_topk(gaussian_library["phase_1"], index, M=2, k=3)


def test_aligned_pearson():
    """Test that shifted copies correlate perfectly within the window"""
    x = np.linspace(0.0, 10.0, 200)
    y = np.exp(-0.5 * ((x - 5.0) / 0.3) ** 2)
    shifted = np.roll(y, 3)
    assert aligned_pearson(shifted, y, max_shift=3) == pytest.approx(1.0)
    assert aligned_pearson(shifted, y, max_shift=1) < 0.99


def test_index_file_roundtrip(tmp_path, index):
    path = tmp_path / "index.pxi"
    write_index(index, path)
    result = read_index_file(path)
    assert result.ids == index.ids
    assert np.array_equal(result.vectors, index.vectors)
    assert result.grid.is_compatible(index.grid)
    assert result.candidates == index.candidates


def test_corrupt_index():
    with pytest.raises(CorruptPatternFile):
        index_from_bytes(b"\x93\x01\x02\x03")


def test_noisy_top1_accuracy():
    """Test Top-1 identification of noisy copies in a 100-entry index"""
    rng = np.random.default_rng(8)
    grid = Grid(10.0, 0.05, 1400)
    x = grid.two_theta
    patterns = {}
    for i in range(100):
        centers = rng.uniform(12.0, 78.0, rng.integers(4, 9))
        heights = rng.uniform(0.2, 1.0, len(centers))
        y = sum(
            h * np.exp(-0.5 * ((x - c) / 0.1) ** 2) for c, h in zip(centers, heights)
        )
        patterns[f"ref_{i:03d}"] = DiffractionPattern.on_grid(grid, y)
    library = ReferenceLibrary(patterns)
    index = build_index(library)

    hits = 0
    for crystal_id, pattern in library.items():
        y = pattern.intensities
        query = y + rng.normal(0.0, 0.01 * y.max(), len(y))
        hits += retrieve_topk(query, index, k=1)[0] == crystal_id
    assert hits >= 90
