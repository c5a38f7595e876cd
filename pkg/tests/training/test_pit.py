import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from pxrdsep.errors import KExceedsKmax
from pxrdsep.training.pit import activity_labels, best_assignment, pit_match


@pytest.mark.parametrize("shape", [(1, 1), (2, 2), (2, 4), (3, 3), (3, 5), (4, 4)])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_best_assignment_is_optimal(shape, seed):
    """Test exhaustive matching against the Hungarian algorithm"""
    costs = np.random.default_rng(seed).uniform(size=shape)
    assignment, cost = best_assignment(costs)
    rows, cols = linear_sum_assignment(costs)
    assert cost == pytest.approx(costs[rows, cols].sum())
    assert len(set(assignment)) == shape[0]
    assert cost == pytest.approx(costs[np.arange(shape[0]), list(assignment)].sum())


def test_best_assignment_random_square():
    """Test 1000 random 4x4 cost matrices against the Hungarian algorithm"""
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        costs = rng.uniform(size=(4, 4))
        assignment, cost = best_assignment(costs)
        rows, cols = linear_sum_assignment(costs)
        assert assignment == tuple(cols)
        assert cost == pytest.approx(costs[rows, cols].sum(), abs=1e-12)


def test_ties_prefer_low_slots():
    assignment, cost = best_assignment(np.zeros((2, 4)))
    assert assignment == (0, 1)
    assert cost == 0.0


def test_empty_targets():
    assert best_assignment(np.zeros((0, 3))) == ((), 0.0)


def test_too_many_targets():
    with pytest.raises(KExceedsKmax):
        best_assignment(np.zeros((4, 3)))


def test_activity_labels():
    assert np.array_equal(activity_labels((2, 0), 4), [1.0, 0.0, 1.0, 0.0])


def test_pit_match_recovers_permutation():
    """Test that permuted slot outputs are matched back to their targets"""
    rng = np.random.default_rng(0)
    targets = rng.uniform(size=(3, 20))
    preds = np.zeros((4, 20))
    preds[[2, 0, 3]] = targets

    def loss_fn(p, t):
        return np.abs(t[:, None, :] - p[None, :, :]).mean(axis=-1)

    assignment, cost, labels = pit_match(preds, targets, loss_fn)
    assert assignment == (2, 0, 3)
    assert cost == pytest.approx(0.0)
    assert np.array_equal(labels, [1.0, 0.0, 1.0, 1.0])
