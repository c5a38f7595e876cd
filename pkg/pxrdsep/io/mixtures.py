import glob
import os

import msgpack
import numpy as np

from pxrdsep.errors import CorruptPatternFile, EmptyInput
from pxrdsep.io.common import atomic_write_bytes, pack_array, unpack_array
from pxrdsep.mixing.sampling import MixtureSample
from pxrdsep.pattern import DiffractionPattern

MIXTURE_MAGIC = "PXRDSEP-MIXTURE"
MIXTURE_VERSION = 1
MIXTURE_SUFFIX = ".pxm"


def mixture_to_bytes(sample):
    """Encode a MixtureSample with its grid, arrays and provenance"""
    return msgpack.packb(
        {
            "magic": MIXTURE_MAGIC,
            "version": MIXTURE_VERSION,
            "grid": [sample.mixed.grid_min, sample.mixed.grid_step, len(sample.mixed)],
            "mixed": pack_array(sample.mixed.intensities),
            "components": pack_array(sample.component_matrix()),
            "weights": pack_array(sample.weights),
            "active_count": sample.active_count,
            "component_ids": list(sample.component_ids),
            "noise_sigma": sample.noise_sigma,
            "seed": list(sample.seed),
        },
        use_bin_type=True,
    )


def mixture_from_bytes(data):
    try:
        payload = msgpack.unpackb(data, raw=False)
        if payload["magic"] != MIXTURE_MAGIC:
            raise CorruptPatternFile(f"Bad mixture magic: {payload['magic']!r}")
        if payload["version"] != MIXTURE_VERSION:
            raise CorruptPatternFile(
                f"Unsupported mixture version: {payload['version']}"
            )
        grid_min, step, _ = payload["grid"]
        mixed = DiffractionPattern(grid_min, step, unpack_array(payload["mixed"]))
        components = tuple(
            DiffractionPattern(grid_min, step, row)
            for row in unpack_array(payload["components"])
        )
        return MixtureSample(
            mixed=mixed,
            components=components,
            weights=unpack_array(payload["weights"]).astype(np.float64),
            active_count=int(payload["active_count"]),
            component_ids=tuple(payload["component_ids"]),
            noise_sigma=float(payload["noise_sigma"]),
            seed=tuple(int(s) for s in payload["seed"]),
        )
    except CorruptPatternFile:
        raise
    except (KeyError, TypeError, ValueError, msgpack.exceptions.ExtraData) as err:
        raise CorruptPatternFile(f"Data do not appear to be a mixture: {err}") from err


def write_mixture(sample, path):
    atomic_write_bytes(path, mixture_to_bytes(sample))


def read_mixture(path):
    with open(path, "rb") as f:
        return mixture_from_bytes(f.read())


def write_mixture_set(directory, samples):
    """Write samples as ``mixture_00000.pxm``, ... into ``directory``"""
    os.makedirs(directory, exist_ok=True)
    paths = []
    for i, sample in enumerate(samples):
        path = os.path.join(directory, f"mixture_{i:05d}{MIXTURE_SUFFIX}")
        write_mixture(sample, path)
        paths.append(path)
    return paths


def read_mixture_set(directory):
    paths = sorted(glob.glob(os.path.join(directory, f"*{MIXTURE_SUFFIX}")))
    if not paths:
        raise EmptyInput(f"No mixture files in {directory}")
    return [read_mixture(p) for p in paths]
