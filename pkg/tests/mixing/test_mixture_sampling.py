from dataclasses import replace

import numpy as np
import pytest

from pxrdsep.errors import (
    InfeasibleFloor,
    InsufficientLibrary,
    RejectionLimitExceeded,
    UnknownAnchor,
)
from pxrdsep.mixing.sampling import (
    MixConfig,
    epoch_mixtures,
    make_mixture,
    mixture_for_index,
    sample_cardinality,
    sample_weights,
)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("N", [1, 2, 4])
def test_sample_weights(N, alpha):
    """Test that weights sum to one and respect the floor"""
    weights = sample_weights(N, alpha=alpha, floor=0.15, rng=0)
    assert weights.shape == (N,)
    assert weights.sum() == pytest.approx(1.0)
    assert weights.min() >= 0.15


@pytest.mark.slow
@pytest.mark.parametrize("N", [2, 3, 4])
def test_sample_weights_distribution(N):
    """Test the sum, floor and symmetry of 100000 weight draws"""
    rng = np.random.default_rng(N)
    draws = np.array([sample_weights(N, floor=0.15, rng=rng) for _ in range(100000)])
    assert np.all(np.abs(draws.sum(axis=1) - 1.0) <= 1e-12)
    assert draws.min() >= 0.15
    if N == 2:
        assert 0.49 <= draws[:, 0].mean() <= 0.51


@pytest.mark.parametrize("N,floor", [(4, 0.25), (7, 0.15)])
def test_infeasible_floor(N, floor):
    with pytest.raises(InfeasibleFloor):
        sample_weights(N, floor=floor, rng=0)


def test_rejection_limit():
    with pytest.raises(RejectionLimitExceeded):
        sample_weights(6, floor=0.16, rng=0, max_attempts=1)


def test_sample_cardinality():
    rng = np.random.default_rng(0)
    counts = {sample_cardinality(rng, 2, 4) for _ in range(200)}
    assert counts == {2, 3, 4}


def test_invalid_mix_config():
    with pytest.raises(ValueError):
        MixConfig(n_min=2, n_max=5, k_max=4)
    with pytest.raises(ValueError):
        MixConfig(alpha=0.0)


def test_mixture_invariants(gaussian_library, mix_config):
    """Test ground truth of a noiseless mixture"""
    cfg = replace(mix_config, noise_sigma=0.0)
    for seed in range(5):
        sample = make_mixture(gaussian_library, "phase_2", seed, cfg)
        N = sample.active_count
        assert cfg.n_min <= N <= cfg.n_max
        assert sample.component_ids[0] == "phase_2"
        assert len(set(sample.component_ids)) == N
        assert sample.k_max == cfg.k_max
        assert sample.weights.sum() == pytest.approx(1.0)
        assert np.allclose(sample.contributions.sum(axis=0), sample.mixed.intensities)
        padding = sample.component_matrix()[N:]
        assert np.all(padding == 0.0)
        peak = max(sample.mixed.max(), *(c.max() for c in sample.components))
        assert peak == pytest.approx(1.0)


def test_noisy_mixture(gaussian_library, mix_config):
    sample = make_mixture(gaussian_library, "phase_0", 4, mix_config)
    assert sample.noise_sigma == mix_config.noise_sigma
    assert np.all(sample.mixed.intensities >= 0.0)
    assert sample.mixed.max() <= 1.0 + 1e-12
    assert not np.allclose(sample.contributions.sum(axis=0), sample.mixed.intensities)


def test_mixture_errors(gaussian_library, mix_config):
    with pytest.raises(UnknownAnchor):
        make_mixture(gaussian_library, "missing", 0, mix_config)
    small = gaussian_library.subset(gaussian_library.ids[:2])
    with pytest.raises(InsufficientLibrary):
        make_mixture(small, small.ids[0], 0, mix_config)


def test_mixture_for_index_is_reproducible(gaussian_library, mix_config):
    """Test that a mixture depends only on its (epoch, index, seed) key"""
    first = mixture_for_index(gaussian_library, 2, 5, 0, mix_config)
    second = mixture_for_index(gaussian_library, 2, 5, 0, mix_config)
    assert first.seed == (2, 5, 0)
    assert first.mixed == second.mixed
    assert first.component_ids == second.component_ids

    epoch = epoch_mixtures(gaussian_library, 2, 0, replace(mix_config, n_samples=6))
    assert epoch[5].mixed == first.mixed
    assert epoch[4].mixed != first.mixed
