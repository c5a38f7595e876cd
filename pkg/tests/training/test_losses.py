import numpy as np
import pytest

from pxrdsep.autograd import Tensor
from pxrdsep.errors import LengthMismatch
from pxrdsep.training.losses import (
    LossWeights,
    activity_bce,
    amplitude_term,
    geometry_term,
    mixture_consistency,
    pretrain_loss,
    separation_costs,
    separation_loss,
    si_sdr,
)


@pytest.fixture
def peaks():
    x = np.linspace(0.0, 1.0, 50)
    return np.stack(
        [np.exp(-0.5 * ((x - c) / 0.05) ** 2) for c in (0.2, 0.5, 0.8)]
    )


def test_amplitude_term():
    """Test the peak-emphasized absolute error against a hand value"""
    value = amplitude_term(Tensor([1.0, 2.0]), Tensor([0.0, 1.0]), alpha=2.0)
    assert value.item() == pytest.approx(2.0)


def test_si_sdr_values():
    """Test SI-SDR on identical, scaled and orthogonal inputs"""
    y = Tensor([1.0, 0.0, 2.0])
    assert si_sdr(y, y).item() == pytest.approx(80.0)
    assert si_sdr(Tensor([2.0, 0.0, 4.0]), y).item() == pytest.approx(80.0)
    half = si_sdr(Tensor([1.0, 1.0]), Tensor([1.0, 0.0])).item()
    assert half == pytest.approx(0.0, abs=1e-6)


def test_si_sdr_batched(peaks):
    values = si_sdr(Tensor(peaks + 0.1), Tensor(peaks))
    assert values.shape == (3,)
    single = si_sdr(Tensor(peaks[1] + 0.1), Tensor(peaks[1]))
    assert values.data[1] == pytest.approx(single.item())


def test_geometry_term(peaks):
    same = geometry_term(Tensor(peaks), Tensor(peaks), beta=0.5)
    assert np.allclose(same.data, 0.0)
    shifted = geometry_term(Tensor(peaks[[1, 2, 0]]), Tensor(peaks), beta=0.5)
    assert np.all(shifted.data > 0.0)


def test_shape_mismatch():
    with pytest.raises(LengthMismatch):
        separation_loss(Tensor(np.ones(4)), Tensor(np.ones(5)), LossWeights())


def test_separation_costs(peaks):
    """Test that the cost matrix is smallest on the true pairing"""
    preds = np.concatenate([peaks[[2, 0, 1]], np.zeros((1, 50))])
    costs = separation_costs(preds, peaks, LossWeights())
    assert costs.shape == (3, 4)
    assert list(np.argmin(costs, axis=1)) == [1, 2, 0]
    direct = separation_loss(Tensor(preds[1]), Tensor(peaks[0]), LossWeights())
    assert costs[0, 1] == pytest.approx(direct.item())


def test_activity_bce():
    value = activity_bce(Tensor(np.zeros(4)), [1.0, 0.0, 1.0, 0.0])
    assert value.item() == pytest.approx(np.log(2.0))


def test_mixture_consistency():
    value = mixture_consistency(Tensor([1.0, 2.0, 3.0]), Tensor([1.0, 1.0, 1.0]))
    assert value.item() == pytest.approx(1.0)


def test_pretrain_loss_masked_only():
    """Test scoring only the hidden grid points"""
    target = np.linspace(0.0, 1.0, 10)
    recon = target.copy()
    recon[:5] += 0.5
    mask = np.zeros(10, dtype=bool)
    mask[5:] = True
    plain = LossWeights(lambda_shape_pre=0.0, lambda_geo_pre=0.0)
    masked = LossWeights(lambda_shape_pre=0.0, lambda_geo_pre=0.0, masked_only=True)
    assert pretrain_loss(Tensor(recon), Tensor(target), plain, mask).item() > 0.0
    assert pretrain_loss(Tensor(recon), Tensor(target), masked, mask).item() == 0.0


def test_negative_weight():
    with pytest.raises(ValueError):
        LossWeights(lambda_mix=-1.0)

