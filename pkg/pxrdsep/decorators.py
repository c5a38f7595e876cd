from functools import wraps
from inspect import signature

import gemmi
import numpy as np

import pxrdsep as ps


def _convert_lattice(val):
    """Helper method to try to convert value to ps.Lattice"""
    if isinstance(val, ps.Lattice) or (val is None):
        return val
    elif isinstance(val, gemmi.UnitCell):
        return ps.Lattice(val.a, val.b, val.c, val.alpha, val.beta, val.gamma)
    elif isinstance(val, (list, tuple, np.ndarray)) and len(val) == 6:
        return ps.Lattice(*val)
    else:
        raise ValueError(f"Cannot construct pxrdsep.Lattice from value: {val}")


def latticeify(func=None, *lattice_args):
    """
    A decorator that converts unit cell arguments to pxrdsep.Lattice objects.

    This decorator allows functions to accept cell parameters as tuples,
    lists, numpy arrays, gemmi.UnitCell or Lattice without boilerplate
    argument checking.

    When specified as ``@latticeify`` or ``@latticeify()``, any arguments named
    "lattice", "cell", or "unit_cell" are coerced. When specified with argument
    names, such as ``@latticeify("reference")``, only those arguments are coerced.

    Note
    ----
        ``None`` values are passed to the decorated function unchanged.
    """
    if not callable(func) and func is not None:
        lattice_args = (func, *lattice_args)

    if len(lattice_args) == 0:
        lattice_args = ("lattice", "cell", "unit_cell")

    def _decorator(f):
        @wraps(f)
        def wrapped(*args, **kwargs):
            sig = signature(f)
            bargs = sig.bind(*args, **kwargs)
            bargs.apply_defaults()
            for arg in lattice_args:
                if arg in bargs.arguments:
                    bargs.arguments[arg] = _convert_lattice(bargs.arguments[arg])
            return f(*bargs.args, **bargs.kwargs)

        return wrapped

    return _decorator(func) if callable(func) else _decorator


def _convert_rng(val):
    if isinstance(val, np.random.Generator):
        return val
    return np.random.default_rng(val)


def rngify(func=None, *rng_args):
    """
    A decorator that converts seed arguments to numpy.random.Generator objects.

    Arguments named "rng" (or the names given explicitly) may be passed as an
    int seed, a sequence of ints, a numpy SeedSequence, ``None`` or a Generator.
    Generators are passed through unchanged so that callers can share streams.
    """
    if not callable(func) and func is not None:
        rng_args = (func, *rng_args)

    if len(rng_args) == 0:
        rng_args = ("rng",)

    def _decorator(f):
        @wraps(f)
        def wrapped(*args, **kwargs):
            sig = signature(f)
            bargs = sig.bind(*args, **kwargs)
            bargs.apply_defaults()
            for arg in rng_args:
                if arg in bargs.arguments:
                    bargs.arguments[arg] = _convert_rng(bargs.arguments[arg])
            return f(*bargs.args, **bargs.kwargs)

        return wrapped

    return _decorator(func) if callable(func) else _decorator
