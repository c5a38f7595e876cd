"""
Parameterized building blocks of the network.
"""

from collections import OrderedDict

import numpy as np

from pxrdsep.autograd import ops
from pxrdsep.autograd.tensor import Tensor, expand, parameter
from pxrdsep.errors import IncompatibleCheckpoint


class Module:
    """
    Container of named parameters and submodules.

    Parameters and submodules are registered by attribute assignment; the
    registration order fixes the order of :meth:`named_parameters`.
    """

    def __init__(self):
        object.__setattr__(self, "_params", OrderedDict())
        object.__setattr__(self, "_modules", OrderedDict())
        object.__setattr__(self, "training", True)

    def __setattr__(self, name, value):
        if isinstance(value, Tensor) and value.requires_grad:
            self._params[name] = value
        elif isinstance(value, Module):
            self._modules[name] = value
        object.__setattr__(self, name, value)

    def named_parameters(self, prefix=""):
        for name, p in self._params.items():
            yield prefix + name, p
        for name, module in self._modules.items():
            yield from module.named_parameters(f"{prefix}{name}.")

    def parameters(self):
        return [p for _, p in self.named_parameters()]

    def n_parameters(self, trainable_only=False):
        return sum(
            p.size for p in self.parameters() if p.requires_grad or not trainable_only
        )

    def zero_grad(self):
        for p in self.parameters():
            p.zero_grad()

    def train(self, mode=True):
        object.__setattr__(self, "training", mode)
        for module in self._modules.values():
            module.train(mode)
        return self

    def eval(self):
        return self.train(False)

    def freeze(self):
        """Stop gradient accumulation into every parameter of this module"""
        for p in self.parameters():
            p.requires_grad = False
            p.zero_grad()

    def state_dict(self):
        return OrderedDict((name, p.data.copy()) for name, p in self.named_parameters())

    def load_state_dict(self, state, strict=True):
        """
        Copy arrays into the parameters of matching name.

        Raises
        ------
        IncompatibleCheckpoint
            On missing or unexpected names (``strict``) or shape mismatches
        """
        params = dict(self.named_parameters())
        if strict:
            missing = sorted(set(params) - set(state))
            unexpected = sorted(set(state) - set(params))
            if missing or unexpected:
                raise IncompatibleCheckpoint(
                    f"Parameter names differ: missing {missing[:5]}, "
                    f"unexpected {unexpected[:5]}"
                )
        for name, value in state.items():
            if name not in params:
                continue
            value = np.asarray(value)
            if value.shape != params[name].shape:
                raise IncompatibleCheckpoint(
                    f"Parameter {name} has shape {value.shape}, "
                    f"expected {params[name].shape}"
                )
            params[name].data[...] = value


def _uniform(rng, fan_in, shape):
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Linear(Module):
    """``x @ W + b`` on the last axis of a (T, in) input"""

    def __init__(self, n_in, n_out, rng, bias=True):
        super().__init__()
        self.weight = parameter(_uniform(rng, n_in, (n_in, n_out)))
        self.bias = parameter(np.zeros(n_out)) if bias else None

    def __call__(self, x):
        out = x @ self.weight
        return out if self.bias is None else out + self.bias


class Conv1d(Module):
    """
    Convolution of a (C, L) feature map.

    Padding totals ``kernel - stride`` zeros, split with the smaller half
    first, so the output length is ``L / stride``.
    """

    def __init__(self, c_in, c_out, kernel, rng, stride=1):
        super().__init__()
        self.stride = stride
        total = kernel - stride
        self.padding = (total // 2, total - total // 2)
        self.weight = parameter(_uniform(rng, c_in * kernel, (c_out, c_in, kernel)))
        self.bias = parameter(np.zeros(c_out))

    def __call__(self, x):
        return ops.conv1d(x, self.weight, self.bias, self.stride, self.padding)


class LayerNorm(Module):
    def __init__(self, dim):
        super().__init__()
        self.gamma = parameter(np.ones(dim))
        self.beta = parameter(np.zeros(dim))

    def __call__(self, x):
        return ops.layer_norm(x, self.gamma, self.beta)


class MultiHeadAttention(Module):
    """Multi-head attention with separate query and key/value inputs"""

    def __init__(self, dim, heads, rng):
        super().__init__()
        self.heads = heads
        self.q_proj = Linear(dim, dim, rng)
        self.k_proj = Linear(dim, dim, rng)
        self.v_proj = Linear(dim, dim, rng)
        self.out_proj = Linear(dim, dim, rng)

    def __call__(self, queries, context):
        q = self.q_proj(queries)
        k = self.k_proj(context)
        v = self.v_proj(context)
        return self.out_proj(ops.scaled_dot_attention(q, k, v, self.heads))


class FeedForward(Module):
    def __init__(self, dim, hidden, rng):
        super().__init__()
        self.fc1 = Linear(dim, hidden, rng)
        self.fc2 = Linear(hidden, dim, rng)

    def __call__(self, x):
        return self.fc2(ops.gelu(self.fc1(x)))


class EncoderLayer(Module):
    """Pre-norm self-attention block with a feed-forward sublayer"""

    def __init__(self, dim, heads, ff_mult, rng, dropout=0.0):
        super().__init__()
        self.dropout = dropout
        self.norm1 = LayerNorm(dim)
        self.attn = MultiHeadAttention(dim, heads, rng)
        self.norm2 = LayerNorm(dim)
        self.ff = FeedForward(dim, ff_mult * dim, rng)

    def __call__(self, z, rng=None):
        h = self.norm1(z)
        z = z + ops.dropout(self.attn(h, h), self.dropout, rng, self.training)
        z = z + ops.dropout(self.ff(self.norm2(z)), self.dropout, rng, self.training)
        return z


def sinusoidal_positions(length, dim):
    """Fixed (length, dim) sine/cosine position table"""
    position = np.arange(length)[:, None]
    div = np.exp(np.arange(0, dim, 2) * (-np.log(10000.0) / dim))
    table = np.zeros((length, dim))
    table[:, 0::2] = np.sin(position * div)
    table[:, 1::2] = np.cos(position * div[: dim // 2])
    return table


def broadcast_rows(column, width):
    """Repeat a (K,) or (K, 1) tensor across ``width`` columns"""
    column = column.reshape(column.size, 1)
    return expand(column, (column.shape[0], width))


class ModuleList(Module):
    """Ordered submodules registered under their index"""

    def __init__(self, modules=()):
        super().__init__()
        object.__setattr__(self, "_items", [])
        for module in modules:
            self.append(module)

    def append(self, module):
        setattr(self, str(len(self._items)), module)
        self._items.append(module)

    def __iter__(self):
        return iter(self._items)

    def __len__(self):
        return len(self._items)

    def __getitem__(self, i):
        return self._items[i]
