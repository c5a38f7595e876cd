import numpy as np
import pytest

from pxrdsep.errors import CorruptPatternFile, EmptyInput
from pxrdsep.io import read_mixture_set, write_mixture_set
from pxrdsep.io.mixtures import mixture_from_bytes


def test_mixture_set_roundtrip(tmp_path, mixture_samples):
    """Test that written mixtures keep patterns, weights and provenance"""
    paths = write_mixture_set(tmp_path / "mixtures", mixture_samples)
    assert len(paths) == len(mixture_samples)
    result = read_mixture_set(tmp_path / "mixtures")
    for read, sample in zip(result, mixture_samples):
        assert read.mixed == sample.mixed
        assert np.array_equal(read.component_matrix(), sample.component_matrix())
        assert np.array_equal(read.weights, sample.weights)
        assert read.active_count == sample.active_count
        assert read.component_ids == sample.component_ids
        assert read.seed == sample.seed
        assert read.noise_sigma == sample.noise_sigma


def test_empty_mixture_set(tmp_path):
    with pytest.raises(EmptyInput):
        read_mixture_set(tmp_path)


def test_corrupt_mixture():
    with pytest.raises(CorruptPatternFile):
        mixture_from_bytes(b"\x92\x01\x02")
