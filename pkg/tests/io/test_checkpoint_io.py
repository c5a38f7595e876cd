import msgpack
import numpy as np
import pytest

from pxrdsep.errors import CorruptCheckpoint, IncompatibleCheckpoint
from pxrdsep.io import load_checkpoint, save_checkpoint
from pxrdsep.io.checkpoint import checkpoint_from_bytes, checkpoint_to_bytes
from pxrdsep.model import Decomposer, MaskedPretrainer


def test_decomposer_checkpoint(tmp_path, tiny_config, tiny_grid):
    """Test that saved weights, EMA, grid and provenance load back"""
    model = Decomposer(tiny_config, seed=3)
    ema = {k: v + 1.0 for k, v in model.state_dict().items()}
    path = tmp_path / "decomposer.ckpt"
    save_checkpoint(path, model, ema=ema, grid=tiny_grid, meta={"stage": 2})

    checkpoint = load_checkpoint(path)
    assert checkpoint.kind == "decomposer"
    assert checkpoint.config == tiny_config
    assert checkpoint.grid == (tiny_grid.grid_min, tiny_grid.step, tiny_grid.length)
    assert checkpoint.meta == {"stage": 2}

    raw = checkpoint.build(use_ema=False).state_dict()
    averaged = checkpoint.build().state_dict()
    for name, value in model.state_dict().items():
        assert np.array_equal(raw[name], value)
        assert np.array_equal(averaged[name], value + 1.0)


def test_pretrainer_checkpoint(tmp_path, tiny_config):
    model = MaskedPretrainer(tiny_config, seed=1)
    path = tmp_path / "pretrain.ckpt"
    save_checkpoint(path, model)
    checkpoint = load_checkpoint(path)
    assert checkpoint.kind == "pretrainer"
    assert checkpoint.ema is None
    assert checkpoint.grid is None
    restored = checkpoint.build()
    assert isinstance(restored, MaskedPretrainer)
    x = np.linspace(0.0, 1.0, tiny_config.L)
    expected, _ = model.eval()(x, rng=0)
    result, _ = restored.eval()(x, rng=0)
    assert np.allclose(result.data, expected.data)


def test_check_config(tmp_path, tiny_config):
    save_checkpoint(tmp_path / "m.ckpt", Decomposer(tiny_config))
    checkpoint = load_checkpoint(tmp_path / "m.ckpt")
    checkpoint.check_config(tiny_config)
    other = type(tiny_config).from_dict({**tiny_config.to_dict(), "k_max": 4})
    with pytest.raises(IncompatibleCheckpoint):
        checkpoint.check_config(other)


def test_corrupt_checkpoints(tmp_path, tiny_config):
    """Test rejection of unreadable, mislabeled and missing checkpoints"""
    with pytest.raises(CorruptCheckpoint):
        checkpoint_from_bytes(b"garbage")
    with pytest.raises(CorruptCheckpoint):
        checkpoint_from_bytes(msgpack.packb({"magic": "OTHER", "version": 1}))
    with pytest.raises(CorruptCheckpoint):
        load_checkpoint(tmp_path / "missing.ckpt")

    save_checkpoint(tmp_path / "m.ckpt", Decomposer(tiny_config))
    checkpoint = load_checkpoint(tmp_path / "m.ckpt")
    checkpoint.kind = "unknown"
    with pytest.raises(CorruptCheckpoint):
        checkpoint_from_bytes(checkpoint_to_bytes(checkpoint))
