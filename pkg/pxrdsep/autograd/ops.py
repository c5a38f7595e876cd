"""
Differentiable operations used by the decomposition network.
"""

import numpy as np
from scipy.special import expit

from pxrdsep.autograd.tensor import Tensor, as_tensor, expand
from pxrdsep.errors import ShapeMismatch, UnsupportedAxis

_SQRT_2_OVER_PI = np.sqrt(2.0 / np.pi)


def _axis(x, axis):
    if not -x.ndim <= axis < x.ndim:
        raise UnsupportedAxis(f"Axis {axis} out of range for shape {x.shape}")
    return axis % x.ndim


def _unary(x, value, derivative):
    """Elementwise op from its value and local derivative arrays"""
    return Tensor._from_op(value, (x,), lambda g: (g * derivative,))


def exp(x):
    x = as_tensor(x)
    value = np.exp(x.data)
    return _unary(x, value, value)


def log(x):
    x = as_tensor(x)
    return _unary(x, np.log(x.data), 1.0 / x.data)


def sqrt(x):
    x = as_tensor(x)
    value = np.sqrt(x.data)
    return _unary(x, value, 0.5 / value)


def abs(x):
    x = as_tensor(x)
    return _unary(x, np.abs(x.data), np.sign(x.data))


def relu(x):
    x = as_tensor(x)
    return _unary(x, np.maximum(x.data, 0.0), (x.data > 0.0).astype(x.data.dtype))


def sigmoid(x):
    x = as_tensor(x)
    value = expit(x.data)
    return _unary(x, value, value * (1.0 - value))


def softplus(x):
    """``log(1 + exp(x))`` evaluated without overflow"""
    x = as_tensor(x)
    value = np.logaddexp(0.0, x.data)
    return _unary(x, value, expit(x.data))


def gelu(x):
    """Gaussian error linear unit (tanh approximation)"""
    x = as_tensor(x)
    u = x.data
    inner = _SQRT_2_OVER_PI * (u + 0.044715 * u**3)
    t = np.tanh(inner)
    value = 0.5 * u * (1.0 + t)
    dinner = _SQRT_2_OVER_PI * (1.0 + 3.0 * 0.044715 * u**2)
    derivative = 0.5 * (1.0 + t) + 0.5 * u * (1.0 - t**2) * dinner
    return _unary(x, value, derivative)


def clip(x, low=None, high=None):
    """Clamp values; the gradient is zero where a bound is active"""
    x = as_tensor(x)
    lo = -np.inf if low is None else low
    hi = np.inf if high is None else high
    inside = ((x.data >= lo) & (x.data <= hi)).astype(x.data.dtype)
    return _unary(x, np.clip(x.data, lo, hi), inside)


def detach(x):
    return as_tensor(x).detach()


def straight_through(hard, soft):
    """Forward ``hard`` values with the gradient of ``soft``"""
    soft = as_tensor(soft)
    return soft + Tensor(np.asarray(hard) - soft.data)


def concat(tensors, axis=0):
    tensors = [as_tensor(t) for t in tensors]
    axis = _axis(tensors[0], axis)
    for t in tensors[1:]:
        if t.ndim != tensors[0].ndim:
            raise ShapeMismatch("Cannot concatenate tensors of different rank")
        other = tuple(n for i, n in enumerate(t.shape) if i != axis)
        first = tuple(n for i, n in enumerate(tensors[0].shape) if i != axis)
        if other != first:
            raise ShapeMismatch(
                f"Cannot concatenate {tensors[0].shape} and {t.shape} on axis {axis}"
            )
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g):
        return tuple(np.split(g, bounds, axis=axis))

    data = np.concatenate([t.data for t in tensors], axis=axis)
    return Tensor._from_op(data, tensors, backward)


def take(table, indices):
    """Rows of ``table`` at integer ``indices`` (repeats allowed)"""
    table = as_tensor(table)
    indices = np.asarray(indices, dtype=np.int64)
    if indices.ndim != 1:
        raise ShapeMismatch("Row indices must be one-dimensional")
    if len(indices) and (indices.min() < -len(table) or indices.max() >= len(table)):
        raise ShapeMismatch(f"Row index out of range for {len(table)} rows")
    shape = table.shape

    def backward(g):
        full = np.zeros(shape, dtype=g.dtype)
        np.add.at(full, indices, g)
        return (full,)

    return Tensor._from_op(table.data[indices], (table,), backward)


embedding_lookup = take


def softmax(x, axis=-1):
    x = as_tensor(x)
    axis = _axis(x, axis)
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    s = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        return (s * (g - (g * s).sum(axis=axis, keepdims=True)),)

    return Tensor._from_op(s, (x,), backward)


def layer_norm(x, gamma=None, beta=None, eps=1e-5):
    """Normalize over the last axis, then apply the optional affine map"""
    x = as_tensor(x)
    n = x.shape[-1]
    mu = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mu
    inv_std = 1.0 / np.sqrt((centered**2).mean(axis=-1, keepdims=True) + eps)
    xhat = centered * inv_std

    def backward(g):
        dx = (
            inv_std
            / n
            * (
                n * g
                - g.sum(axis=-1, keepdims=True)
                - xhat * (g * xhat).sum(axis=-1, keepdims=True)
            )
        )
        return (dx,)

    out = Tensor._from_op(xhat, (x,), backward)
    if gamma is not None:
        out = out * gamma
    if beta is not None:
        out = out + beta
    return out


def conv1d(x, weight, bias=None, stride=1, padding=(0, 0)):
    """
    One-dimensional cross-correlation.

    Parameters
    ----------
    x : Tensor
        Input of shape (C_in, L)
    weight : Tensor
        Kernel of shape (C_out, C_in, K)
    bias : Tensor (optional)
        Shape (C_out,)
    stride : int
        Step between output positions
    padding : int or (int, int)
        Zeros added before and after the input

    Returns
    -------
    Tensor
        Shape (C_out, (L + pad - K) // stride + 1)
    """
    x, weight = as_tensor(x), as_tensor(weight)
    if isinstance(padding, int):
        padding = (padding, padding)
    left, right = padding
    if x.ndim != 2 or weight.ndim != 3 or weight.shape[1] != x.shape[0]:
        raise ShapeMismatch(f"Cannot convolve {x.shape} with kernel {weight.shape}")
    c_in, length = x.shape
    c_out, _, K = weight.shape
    padded_length = length + left + right
    if padded_length < K:
        raise ShapeMismatch(
            f"Input of length {length} (padded {padded_length}) is shorter than "
            f"the kernel ({K})"
        )
    T = (padded_length - K) // stride + 1
    xp = np.pad(x.data, ((0, 0), (left, right)))
    w = weight.data
    span = stride * (T - 1) + 1

    out = np.zeros((c_out, T), dtype=xp.dtype)
    for k in range(K):
        out += w[:, :, k] @ xp[:, k : k + span : stride]

    def backward(g):
        gx = np.zeros_like(xp)
        gw = np.empty_like(w)
        for k in range(K):
            gw[:, :, k] = g @ xp[:, k : k + span : stride].T
            gx[:, k : k + span : stride] += w[:, :, k].T @ g
        return gx[:, left : left + length], gw

    result = Tensor._from_op(out, (x, weight), backward)
    if bias is not None:
        result = result + expand(as_tensor(bias).reshape(c_out, 1), (c_out, T))
    return result


def upsample(x, factor):
    """Nearest-neighbour repeat along the last axis"""
    x = as_tensor(x)
    factor = int(factor)
    if factor == 1:
        return x
    shape = x.shape

    def backward(g):
        return (g.reshape(*shape, factor).sum(axis=-1),)

    return Tensor._from_op(np.repeat(x.data, factor, axis=-1), (x,), backward)


def overlap_add(patches, stride, length):
    """
    Fold overlapping rows of ``patches`` (n, P) into a length-``length``
    signal, row ``i`` starting at ``i * stride``.
    """
    patches = as_tensor(patches)
    n, P = patches.shape
    if (n - 1) * stride + P > length:
        raise ShapeMismatch(f"{n} patches of {P} at stride {stride} exceed {length}")
    positions = (np.arange(n)[:, None] * stride + np.arange(P)[None, :]).ravel()
    out = np.zeros(length, dtype=patches.data.dtype)
    np.add.at(out, positions, patches.data.ravel())

    def backward(g):
        return (g[positions].reshape(n, P),)

    return Tensor._from_op(out, (patches,), backward)


def scaled_dot_attention(q, k, v, heads=1):
    """
    Multi-head scaled dot-product attention.

    Parameters
    ----------
    q : Tensor
        Queries (T_q, D)
    k, v : Tensor
        Keys and values (T_k, D)
    heads : int
        Number of heads; D must be divisible by it

    Returns
    -------
    Tensor
        (T_q, D) concatenation of the per-head outputs
    """
    q, k, v = as_tensor(q), as_tensor(k), as_tensor(v)
    (Tq, D), Tk = q.shape, k.shape[0]
    if k.shape != v.shape or k.shape[1] != D or D % heads:
        raise ShapeMismatch(f"Incompatible attention shapes {q.shape}, {k.shape}")
    dh = D // heads

    def split(t, n):
        return t.reshape(n, heads, dh).transpose(1, 0, 2)

    qh, kh, vh = split(q, Tq), split(k, Tk), split(v, Tk)
    scores = (qh @ kh.transpose(0, 2, 1)) * (1.0 / np.sqrt(dh))
    attn = softmax(scores, axis=-1)
    return (attn @ vh).transpose(1, 0, 2).reshape(Tq, D)


def dropout(x, rate, rng=None, training=True):
    """Inverted dropout; identity outside training or at rate 0"""
    x = as_tensor(x)
    if not training or rate <= 0.0:
        return x
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"Dropout rate must lie in [0, 1): {rate}")
    rng = np.random.default_rng(rng)
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return x * Tensor(keep)
