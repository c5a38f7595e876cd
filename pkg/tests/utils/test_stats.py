import numpy as np
import pytest

from pxrdsep.errors import DegenerateInput, LengthMismatch
from pxrdsep.utils import pearson, weighted_pearsonr


@pytest.fixture
def signal():
    x = np.linspace(0.0, 10.0, 200)
    return np.exp(-0.5 * (x - 4.0) ** 2) + 0.3 * np.sin(x)


def test_pearson_identity(signal):
    assert np.isclose(pearson(signal, signal), 1.0)
    assert np.isclose(pearson(signal, 3.0 * signal + 2.0), 1.0)
    assert np.isclose(pearson(signal, -signal), -1.0)


def test_pearson_matches_numpy(signal):
    other = np.roll(signal, 7)
    assert np.isclose(pearson(signal, other), np.corrcoef(signal, other)[0, 1])


def test_pearson_constant(signal):
    assert np.isnan(pearson(signal, np.ones_like(signal)))
    with pytest.raises(DegenerateInput):
        pearson(np.zeros(5), np.ones(5))


@pytest.mark.parametrize("a,b", [(np.ones(3), np.ones(4)), (np.ones(1), np.ones(1))])
def test_pearson_lengths(a, b):
    with pytest.raises(LengthMismatch):
        pearson(a, b)


def test_weighted_pearsonr_batched():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(3, 50))
    y = x + rng.normal(size=(3, 50))
    w = np.ones_like(x)
    r = weighted_pearsonr(x, y, w)
    assert r.shape == (3,)
    for i in range(3):
        assert np.isclose(r[i], np.corrcoef(x[i], y[i])[0, 1])
