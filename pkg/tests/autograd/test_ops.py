import numpy as np
import pytest

from pxrdsep.autograd import Tensor, finite_diff_check, ops, parameter, relative_error
from pxrdsep.errors import ShapeMismatch

TOLERANCE = 1e-5


@pytest.fixture
def rng():
    return np.random.default_rng(11)


def _param(rng, *shape, low=-1.0, high=1.0):
    return parameter(rng.uniform(low, high, shape))


@pytest.mark.parametrize(
    "op",
    [ops.exp, ops.sigmoid, ops.softplus, ops.gelu, lambda x: ops.softmax(x, axis=-1)],
)
def test_unary_gradients(rng, op):
    assert finite_diff_check(op, [_param(rng, 3, 4)]) < TOLERANCE


def test_positive_domain_gradients(rng):
    x = _param(rng, 5, low=0.5, high=2.0)
    assert finite_diff_check(ops.log, [x]) < TOLERANCE
    assert finite_diff_check(ops.sqrt, [x]) < TOLERANCE
    assert finite_diff_check(lambda t: t**-1.5, [x]) < TOLERANCE


def test_kinked_gradients():
    """abs, relu and clip away from their kinks"""
    x = parameter(np.array([-1.5, -0.4, 0.3, 0.8, 2.0]))
    assert finite_diff_check(ops.abs, [x]) < TOLERANCE
    assert finite_diff_check(ops.relu, [x]) < TOLERANCE
    assert finite_diff_check(lambda t: ops.clip(t, -1.0, 1.0), [x]) < TOLERANCE


def test_matmul_gradient(rng):
    a, b = _param(rng, 3, 4), _param(rng, 4, 2)
    assert finite_diff_check(lambda x, y: x @ y, [a, b]) < TOLERANCE
    batched = _param(rng, 2, 3, 4), _param(rng, 2, 4, 5)
    assert finite_diff_check(lambda x, y: x @ y, list(batched)) < TOLERANCE


def test_layer_norm_gradient(rng):
    x, gamma, beta = _param(rng, 4, 6), _param(rng, 6), _param(rng, 6)
    func = ops.layer_norm
    assert finite_diff_check(func, [x, gamma, beta]) < TOLERANCE


@pytest.mark.parametrize("stride,padding", [(1, (0, 0)), (2, (1, 2)), (3, 1)])
def test_conv1d_gradient(rng, stride, padding):
    x, w, b = _param(rng, 2, 17), _param(rng, 3, 2, 4), _param(rng, 3)

    def func(x, w, b):
        return ops.conv1d(x, w, b, stride=stride, padding=padding)

    assert finite_diff_check(func, [x, w, b]) < TOLERANCE


def test_conv1d_matches_numpy(rng):
    x = rng.normal(size=(1, 20))
    w = rng.normal(size=(1, 1, 5))
    out = ops.conv1d(Tensor(x), Tensor(w)).data[0]
    expected = np.correlate(x[0], w[0, 0], mode="valid")
    assert np.allclose(out, expected)
    with pytest.raises(ShapeMismatch):
        ops.conv1d(Tensor(np.ones((1, 3))), Tensor(np.ones((1, 1, 5))))


def test_attention_gradient(rng):
    q, k, v = _param(rng, 3, 8), _param(rng, 5, 8), _param(rng, 5, 8)

    def func(q, k, v):
        return ops.scaled_dot_attention(q, k, v, heads=2)

    assert finite_diff_check(func, [q, k, v]) < TOLERANCE


def test_structural_gradients(rng):
    a, b = _param(rng, 2, 3), _param(rng, 4, 3)
    assert finite_diff_check(lambda x, y: ops.concat([x, y]), [a, b]) < TOLERANCE
    assert finite_diff_check(lambda x: ops.take(x, [3, 0, 3]), [b]) < TOLERANCE
    assert finite_diff_check(lambda x: ops.upsample(x, 3), [a]) < TOLERANCE
    assert finite_diff_check(lambda x: x.T.reshape(6, 2), [b]) < TOLERANCE
    patches = _param(rng, 4, 6)
    func = lambda x: ops.overlap_add(x, 3, 15)  # noqa: E731
    assert finite_diff_check(func, [patches]) < TOLERANCE


def test_overlap_add_values():
    patches = Tensor(np.ones((3, 4)))
    out = ops.overlap_add(patches, 2, 8).data
    assert np.array_equal(out, [1, 1, 2, 2, 2, 2, 1, 1])
    with pytest.raises(ShapeMismatch):
        ops.overlap_add(patches, 2, 7)


def test_straight_through():
    soft = parameter(np.array([0.2, 0.7]))
    hard = ops.straight_through(soft.data > 0.5, soft)
    assert np.allclose(hard.data, [0.0, 1.0])
    (hard * Tensor(np.array([2.0, 3.0]))).sum().backward()
    assert np.array_equal(soft.grad, [2.0, 3.0])


def test_dropout():
    x = Tensor(np.ones(1000))
    assert ops.dropout(x, 0.5, training=False) is x
    dropped = ops.dropout(x, 0.5, rng=0).data
    assert set(np.unique(dropped)) <= {0.0, 2.0}
    assert np.array_equal(dropped, ops.dropout(x, 0.5, rng=0).data)
    with pytest.raises(ValueError):
        ops.dropout(x, 1.0)


def test_relative_error_floor():
    assert relative_error(1e-6, 0.0)[()] == pytest.approx(1e-3)
    assert relative_error(2.0, 1.0)[()] == pytest.approx(0.5)
