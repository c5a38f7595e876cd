import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import msgpack
import numpy as np

from pxrdsep.errors import CorruptCheckpoint, IncompatibleCheckpoint
from pxrdsep.io.common import atomic_write_bytes, pack_array, unpack_array
from pxrdsep.model.config import ModelConfig
from pxrdsep.model.decomposer import Decomposer
from pxrdsep.model.pretrain import MaskedPretrainer

logger = logging.getLogger("ps.io.checkpoint")

CHECKPOINT_MAGIC = "PXRDSEP-CHECKPOINT"
CHECKPOINT_VERSION = 1
CHECKPOINT_KINDS = {"decomposer": Decomposer, "pretrainer": MaskedPretrainer}


@dataclass
class Checkpoint:
    """
    Weights and provenance of a trained network.

    Attributes
    ----------
    kind : str
        "decomposer" or "pretrainer"
    config : ModelConfig
        Architecture the weights belong to
    params : dict
        Parameter name -> array
    ema : dict or None
        Exponential-moving-average shadow of ``params``
    grid : tuple or None
        (grid_min, step, length) of the training patterns
    meta : dict
        Free-form provenance (stage, epochs, losses)
    """

    kind: str
    config: ModelConfig
    params: Dict[str, np.ndarray]
    ema: Optional[Dict[str, np.ndarray]] = None
    grid: Optional[Tuple[float, float, int]] = None
    meta: dict = field(default_factory=dict)

    def build(self, use_ema=True):
        """Instantiate the network and load its weights (EMA when present)"""
        model = CHECKPOINT_KINDS[self.kind](self.config)
        weights = self.ema if (use_ema and self.ema is not None) else self.params
        model.load_state_dict(weights)
        return model

    def check_config(self, config):
        """
        Raises
        ------
        IncompatibleCheckpoint
            If the stored architecture differs from ``config``
        """
        if self.config != config:
            diff = {
                k: (v, getattr(config, k))
                for k, v in vars(self.config).items()
                if v != getattr(config, k)
            }
            raise IncompatibleCheckpoint(f"Checkpoint architecture differs: {diff}")


def checkpoint_to_bytes(checkpoint):
    ema = checkpoint.ema
    payload = {
        "magic": CHECKPOINT_MAGIC,
        "version": CHECKPOINT_VERSION,
        "kind": checkpoint.kind,
        "config": checkpoint.config.to_dict(),
        "grid": None if checkpoint.grid is None else list(checkpoint.grid),
        "params": {k: pack_array(v) for k, v in checkpoint.params.items()},
        "ema": None if ema is None else {k: pack_array(v) for k, v in ema.items()},
        "meta": checkpoint.meta,
    }
    return msgpack.packb(payload, use_bin_type=True)


def checkpoint_from_bytes(data):
    """
    Decode the output of :func:`checkpoint_to_bytes`.

    Raises
    ------
    CorruptCheckpoint
        On unreadable payloads, wrong magic or version, or unknown kinds
    """
    try:
        payload = msgpack.unpackb(data, raw=False)
        magic = payload["magic"]
        version = payload["version"]
    except (ValueError, TypeError, KeyError, msgpack.exceptions.ExtraData) as err:
        raise CorruptCheckpoint("Data are not a pxrdsep checkpoint") from err
    if magic != CHECKPOINT_MAGIC:
        raise CorruptCheckpoint(f"Bad checkpoint magic: {magic!r}")
    if version != CHECKPOINT_VERSION:
        raise CorruptCheckpoint(f"Unsupported checkpoint version: {version}")
    try:
        kind = payload["kind"]
        if kind not in CHECKPOINT_KINDS:
            raise CorruptCheckpoint(f"Unknown checkpoint kind: {kind!r}")
        config = ModelConfig.from_dict(payload["config"])
        params = {k: unpack_array(v) for k, v in payload["params"].items()}
        ema = payload["ema"]
        if ema is not None:
            ema = {k: unpack_array(v) for k, v in ema.items()}
        grid = payload["grid"]
    except (KeyError, TypeError, ValueError) as err:
        raise CorruptCheckpoint(f"Malformed checkpoint contents: {err}") from err
    return Checkpoint(
        kind=kind,
        config=config,
        params=params,
        ema=ema,
        grid=None if grid is None else (float(grid[0]), float(grid[1]), int(grid[2])),
        meta=payload.get("meta") or {},
    )


def save_checkpoint(path, model, ema=None, grid=None, meta=None):
    """
    Write a model's weights atomically.

    Parameters
    ----------
    path : str or path object
        Output file
    model : Decomposer or MaskedPretrainer
        Network to save
    ema : dict (optional)
        Shadow weights stored next to the raw ones
    grid : Grid (optional)
        Pattern grid the network was trained on
    meta : dict (optional)
        Provenance entries (plain Python scalars and strings)
    """
    kind = next(k for k, cls in CHECKPOINT_KINDS.items() if isinstance(model, cls))
    checkpoint = Checkpoint(
        kind=kind,
        config=model.config,
        params=model.state_dict(),
        ema=None if ema is None else dict(ema),
        grid=None if grid is None else (grid.grid_min, grid.step, grid.length),
        meta=dict(meta or {}),
    )
    atomic_write_bytes(path, checkpoint_to_bytes(checkpoint))
    logger.debug(f"Saved {kind} checkpoint to {path}")
    return checkpoint


def load_checkpoint(path):
    try:
        with open(path, "rb") as f:
            data = f.read()
    except FileNotFoundError as err:
        raise CorruptCheckpoint(f"Checkpoint not found: {path}") from err
    return checkpoint_from_bytes(data)
