import logging
import os
import sys
import tempfile
import warnings
from contextlib import contextmanager
from importlib.util import find_spec

import numpy as np

_LOGGERS = (
    "ps",
    "ps.io.cif",
    "ps.simulate",
    "ps.mixing",
    "ps.training",
    "ps.evaluation",
    "ps.cli",
)


def set_ray_loglevel(level):
    logger = logging.getLogger("ray")
    logger.setLevel(level)
    for handler in logger.handlers:
        handler.setLevel(level)


def set_loglevel(verbose=False):
    """
    Switch every ``ps.*`` logger (and ray's) between DEBUG and WARNING.

    A stdout handler is attached to the ``ps`` root logger the first time
    this is called.
    """
    level = logging.DEBUG if verbose else logging.WARNING
    root = logging.getLogger("ps")
    if not any(getattr(h, "_ps_handler", False) for h in root.handlers):
        handler = logging.StreamHandler(sys.stdout)
        handler.setFormatter(logging.Formatter("%(name)s: %(message)s"))
        handler._ps_handler = True
        root.addHandler(handler)
    for name in _LOGGERS:
        logging.getLogger(name).setLevel(level)
    set_ray_loglevel(level)


def check_for_ray():
    has_ray = True
    if find_spec("ray") is None:
        has_ray = False

        message = (
            "ray (https://www.ray.io/) is not available..." "Falling back to serial."
        )
        warnings.warn(message, ImportWarning)
    return has_ray


@contextmanager
def ray_context(log_level="DEBUG", **ray_kwargs):
    import ray

    set_ray_loglevel(log_level)
    ray.init(**ray_kwargs)
    try:
        yield ray
    finally:
        ray.shutdown()


def parallel_map(func, items, threads=1):
    """
    Apply ``func`` to every item, in order.

    With ``threads > 1`` and ray installed the calls run as ray tasks;
    otherwise they run serially. Results are returned in input order either
    way, so output never depends on scheduling.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1 or not check_for_ray():
        return [func(item) for item in items]

    with ray_context(log_level="WARNING", num_cpus=threads) as ray:
        remote = ray.remote(func)
        return ray.get([remote.remote(item) for item in items])


MSGPACK_DTYPES = {
    "double": np.dtype("<f8"),
    "float": np.dtype("<f4"),
    "int": np.dtype("<i8"),
}


def pack_array(array):
    """
    Encode an array as ``[dtype, shape, buffer]`` for msgpack.

    Data are stored little-endian regardless of platform.
    """
    array = np.asarray(array)
    if array.dtype.kind == "f":
        name = "double" if array.dtype.itemsize == 8 else "float"
    elif array.dtype.kind in "iub":
        name = "int"
    else:
        raise ValueError(f"Cannot pack array of dtype: {array.dtype}")
    buff = np.ascontiguousarray(array, dtype=MSGPACK_DTYPES[name]).tobytes()
    return [name, list(array.shape), buff]


def unpack_array(data):
    """Inverse of :func:`pack_array`"""
    name, shape, buff = data
    if name not in MSGPACK_DTYPES:
        raise IOError(f"Unknown array dtype in payload: {name!r}")
    values = np.frombuffer(buff, MSGPACK_DTYPES[name])
    return values.reshape(shape).astype(MSGPACK_DTYPES[name].newbyteorder("="))


def atomic_write_bytes(path, payload):
    """Write bytes to ``path`` through a temporary file and a rename"""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
