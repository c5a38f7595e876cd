"""
Dense tensors with reverse-mode differentiation.

A :class:`Tensor` wraps a numpy array of at most three dimensions. Every
operation on tensors that require gradients records its parents and a
closure mapping the output gradient to one gradient per parent; calling
:meth:`Tensor.backward` on a scalar walks that graph once in reverse
topological order and accumulates gradients into the leaves.

Broadcasting is limited to scalars and trailing-dimension operands (e.g.
adding a bias of shape ``(D,)`` to a ``(T, D)`` array). Any other shape
combination must go through :func:`expand`.
"""

import contextlib
import os

import numpy as np

from pxrdsep.errors import NonFiniteValue, ShapeMismatch, UnsupportedAxis

MAX_NDIM = 3

_state = {
    "grad_enabled": True,
    "debug": bool(os.environ.get("PXRDSEP_DEBUG")),
    "dtype": np.float64,
}


def set_debug(flag):
    """Check every forward result for NaN/Inf values"""
    _state["debug"] = bool(flag)


def set_default_dtype(dtype):
    dtype = np.dtype(dtype)
    if dtype not in (np.dtype(np.float64), np.dtype(np.float32)):
        raise ValueError(f"Unsupported tensor dtype: {dtype}")
    _state["dtype"] = dtype.type


def get_default_dtype():
    return _state["dtype"]


def is_grad_enabled():
    return _state["grad_enabled"]


@contextlib.contextmanager
def no_grad():
    """Disable graph recording within the context"""
    previous = _state["grad_enabled"]
    _state["grad_enabled"] = False
    try:
        yield
    finally:
        _state["grad_enabled"] = previous


def _sum_to_shape(grad, shape):
    """Reduce a broadcast gradient back onto ``shape``"""
    if grad.shape == shape:
        return grad
    lead = grad.ndim - len(shape)
    if lead > 0:
        grad = grad.sum(axis=tuple(range(lead)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _check_broadcast(a, b, op):
    if a == b or len(a) == 0 or len(b) == 0:
        return
    short, long_ = (a, b) if len(a) < len(b) else (b, a)
    if len(short) < len(long_) and long_[len(long_) - len(short) :] == short:
        return
    raise ShapeMismatch(f"Cannot {op} tensors of shapes {a} and {b}; use expand()")


def as_tensor(value):
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


class Tensor:
    """
    Array node of a differentiable computation graph.

    Parameters
    ----------
    data : array-like
        Values; copied into a contiguous array of the default dtype
    requires_grad : bool
        Accumulate gradients into ``grad`` on backward passes
    name : str (optional)
        Label used in error messages and parameter tables
    """

    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, name=None):
        data = np.array(data, dtype=_state["dtype"])
        if data.ndim > MAX_NDIM:
            raise ShapeMismatch(
                f"Tensors hold at most {MAX_NDIM} dimensions, got shape {data.shape}"
            )
        self.data = data
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self.name = name
        self._parents = ()
        self._backward = None

    @classmethod
    def _from_op(cls, data, parents, backward):
        out = cls.__new__(cls)
        out.data = np.asarray(data, dtype=_state["dtype"])
        if out.data.ndim > MAX_NDIM:
            raise ShapeMismatch(f"Operation produced shape {out.data.shape}")
        if _state["debug"] and not np.all(np.isfinite(out.data)):
            raise NonFiniteValue("Forward operation produced NaN or Inf values")
        out.grad = None
        out.name = None
        tracked = _state["grad_enabled"] and any(p.requires_grad for p in parents)
        out.requires_grad = tracked
        out._parents = tuple(parents) if tracked else ()
        out._backward = backward if tracked else None
        return out

    def __repr__(self):
        label = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{label})"

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def __len__(self):
        return len(self.data)

    def numpy(self):
        return self.data.copy()

    def item(self):
        return float(self.data)

    def detach(self):
        return Tensor(self.data)

    def zero_grad(self):
        self.grad = None

    def _topological_order(self):
        order, visited = [], set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))
        return order

    def backward(self, grad=None):
        """
        Accumulate d(self)/d(leaf) into every leaf that requires gradients.

        Parameters
        ----------
        grad : array-like (optional)
            Upstream gradient; defaults to 1 for single-element tensors
        """
        if not self.requires_grad:
            raise ValueError("Tensor does not require gradients")
        if grad is None:
            if self.size != 1:
                raise ShapeMismatch("backward() without a gradient needs a scalar")
            grad = np.ones_like(self.data)
        grad = np.asarray(grad, dtype=self.data.dtype)
        if grad.shape != self.shape:
            raise ShapeMismatch(f"Gradient shape {grad.shape} != {self.shape}")

        pending = {id(self): grad}
        for node in reversed(self._topological_order()):
            g = pending.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                node.grad = np.array(g) if node.grad is None else node.grad + g
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                pending[key] = pg if key not in pending else pending[key] + pg

    # Arithmetic
    def __add__(self, other):
        other = as_tensor(other)
        _check_broadcast(self.shape, other.shape, "add")
        a_shape, b_shape = self.shape, other.shape

        def backward(g):
            return _sum_to_shape(g, a_shape), _sum_to_shape(g, b_shape)

        return Tensor._from_op(self.data + other.data, (self, other), backward)

    def __radd__(self, other):
        return as_tensor(other) + self

    def __neg__(self):
        return Tensor._from_op(-self.data, (self,), lambda g: (-g,))

    def __sub__(self, other):
        return self + (-as_tensor(other))

    def __rsub__(self, other):
        return as_tensor(other) + (-self)

    def __mul__(self, other):
        other = as_tensor(other)
        _check_broadcast(self.shape, other.shape, "multiply")
        a, b = self.data, other.data

        def backward(g):
            return _sum_to_shape(g * b, a.shape), _sum_to_shape(g * a, b.shape)

        return Tensor._from_op(a * b, (self, other), backward)

    def __rmul__(self, other):
        return as_tensor(other) * self

    def __pow__(self, exponent):
        if isinstance(exponent, Tensor):
            raise TypeError("Only scalar exponents are supported")
        x = self.data
        p = float(exponent)

        def backward(g):
            return (g * p * x ** (p - 1.0),)

        return Tensor._from_op(x**p, (self,), backward)

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            return self * other**-1.0
        return self * (1.0 / float(other))

    def __rtruediv__(self, other):
        return as_tensor(other) * self**-1.0

    def __matmul__(self, other):
        other = as_tensor(other)
        a, b = self.data, other.data
        if a.ndim not in (2, 3) or a.ndim != b.ndim:
            raise ShapeMismatch(f"Cannot matmul shapes {a.shape} and {b.shape}")
        if a.shape[-1] != b.shape[-2] or a.shape[:-2] != b.shape[:-2]:
            raise ShapeMismatch(f"Cannot matmul shapes {a.shape} and {b.shape}")

        def backward(g):
            return g @ np.swapaxes(b, -1, -2), np.swapaxes(a, -1, -2) @ g

        return Tensor._from_op(a @ b, (self, other), backward)

    # Shape manipulation
    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        original = self.shape
        try:
            data = self.data.reshape(shape)
        except ValueError as err:
            raise ShapeMismatch(f"Cannot reshape {original} to {shape}") from err
        return Tensor._from_op(data, (self,), lambda g: (g.reshape(original),))

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        axes = axes or tuple(reversed(range(self.ndim)))
        if sorted(axes) != list(range(self.ndim)):
            raise ShapeMismatch(f"Invalid axes {axes} for shape {self.shape}")
        inverse = tuple(np.argsort(axes))
        data = np.transpose(self.data, axes)
        return Tensor._from_op(data, (self,), lambda g: (np.transpose(g, inverse),))

    @property
    def T(self):
        return self.transpose()

    def __getitem__(self, index):
        shape = self.shape
        parts = index if isinstance(index, tuple) else (index,)
        if not all(isinstance(p, (int, slice, type(Ellipsis))) for p in parts):
            raise TypeError("Only basic slicing is supported; use take()")
        data = np.array(self.data[index])

        def backward(g):
            full = np.zeros(shape, dtype=g.dtype)
            full[index] += g
            return (full,)

        return Tensor._from_op(data, (self,), backward)

    # Reductions
    def _check_axis(self, axis):
        if axis is None:
            return None
        if not -self.ndim <= axis < self.ndim:
            raise UnsupportedAxis(f"Axis {axis} out of range for shape {self.shape}")
        return axis % self.ndim

    def sum(self, axis=None, keepdims=False):
        axis = self._check_axis(axis)
        shape = self.shape

        def backward(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, shape).copy(),)

        data = self.data.sum(axis=axis, keepdims=keepdims)
        return Tensor._from_op(data, (self,), backward)

    def mean(self, axis=None, keepdims=False):
        axis = self._check_axis(axis)
        count = self.size if axis is None else self.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)


def expand(x, shape):
    """Broadcast ``x`` to ``shape`` explicitly (numpy rules)"""
    x = as_tensor(x)
    shape = tuple(shape)
    try:
        data = np.broadcast_to(x.data, shape)
    except ValueError as err:
        raise ShapeMismatch(f"Cannot expand {x.shape} to {shape}") from err
    original = x.shape
    return Tensor._from_op(
        data.copy(), (x,), lambda g: (_sum_to_shape(g, original),)
    )


def parameter(data, name=None):
    """Leaf tensor that requires gradients"""
    return Tensor(data, requires_grad=True, name=name)
