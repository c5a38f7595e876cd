from dataclasses import replace

import numpy as np
import pytest

from pxrdsep.errors import IncompatibleCheckpoint
from pxrdsep.evaluation import evaluate_run
from pxrdsep.io import load_checkpoint
from pxrdsep.mixing.library import ReferenceLibrary
from pxrdsep.mixing.sampling import MixConfig, epoch_mixtures
from pxrdsep.model import Decomposer, MaskedPretrainer, ModelConfig
from pxrdsep.pattern import DiffractionPattern, Grid
from pxrdsep.training.losses import LossWeights
from pxrdsep.training.stages import (
    TrainConfig,
    TrainLog,
    loss_total,
    pretrain_validation_loss,
    run_stage1,
    run_stage2,
    transfer_encoder,
)


@pytest.fixture
def train_config():
    return TrainConfig(
        pretrain_epochs=2, epochs=2, warmup_epochs=1, batch_size=2, seed=3
    )


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(epochs=1, warmup_epochs=1)
    with pytest.raises(ValueError):
        TrainConfig(lr=0.0)
    with pytest.raises(ValueError):
        TrainConfig(batch_size=0)


def test_train_log(tmp_path):
    """Test that the log creates its directory and appends one line per record"""
    path = tmp_path / "stage1" / "train_log.txt"
    log = TrainLog(path)
    line = log.record(stage=1, epoch=2, loss=0.5)
    log.record(stage=1, epoch=3, loss=0.25)
    lines = path.read_text().splitlines()
    assert lines[0] == line
    assert lines[0].startswith("stage=1 epoch=2 loss=0.5 wall=")
    assert len(lines) == 2


def test_run_stage1(tmp_path, gaussian_library, tiny_config, train_config):
    """Test that pretraining keeps the best validation weights"""
    model = MaskedPretrainer(tiny_config, seed=0)
    path = tmp_path / "pretrain.ckpt"
    result = run_stage1(
        gaussian_library, model, train_config, checkpoint_path=path
    )
    assert [h["epoch"] for h in result.history] == [0, 1, 2]
    assert len(result.losses) == 2
    best = min(h["val_loss"] for h in result.history)
    current = pretrain_validation_loss(
        result.model, gaussian_library, LossWeights(), train_config.seed
    )
    assert current == pytest.approx(best)
    assert load_checkpoint(path).meta["stage"] == 1


def test_transfer_encoder(tiny_config):
    pretrained = MaskedPretrainer(tiny_config, seed=5)
    model = Decomposer(tiny_config, seed=6)
    transfer_encoder(pretrained, model)
    for name, value in pretrained.encoder.state_dict().items():
        assert np.array_equal(model.encoder.state_dict()[name], value)

    wider = replace(tiny_config, d_model=32)
    with pytest.raises(IncompatibleCheckpoint):
        transfer_encoder(MaskedPretrainer(wider), model)


def test_loss_total(tiny_config, mixture_samples):
    model = Decomposer(tiny_config, seed=0)
    sample = mixture_samples[0]
    x = sample.mixed.intensities
    loss, terms, assignment = loss_total(
        model(x), sample.contributions, x, LossWeights()
    )
    assert len(assignment) == sample.active_count
    assert len(set(assignment)) == sample.active_count
    assert terms["total"] == pytest.approx(terms["sep"] + terms["act"] + terms["mix"])
    assert loss.item() == pytest.approx(terms["total"])


def test_run_stage2_freezes_encoder(
    tmp_path, gaussian_library, tiny_config, mix_config, train_config
):
    """Test that decomposition training leaves the pretrained encoder fixed"""
    pretrained = MaskedPretrainer(tiny_config, seed=9)
    model = Decomposer(tiny_config, seed=0)
    before = model.state_dict()
    path = tmp_path / "model.ckpt"
    log_path = tmp_path / "train_log.txt"
    result = run_stage2(
        gaussian_library,
        model,
        train_config,
        mix_cfg=mix_config,
        pretrained=pretrained,
        val_library=gaussian_library,
        log=TrainLog(log_path),
        checkpoint_path=path,
    )
    after = result.model.state_dict()
    for name, value in pretrained.encoder.state_dict().items():
        assert np.array_equal(after[f"encoder.{name}"], value)
    changed = [
        name
        for name in after
        if not name.startswith("encoder.")
        and not np.array_equal(after[name], before[name])
    ]
    assert changed

    assert len(result.history) == 2
    assert all(np.isfinite(h["val_loss"]) for h in result.history)
    assert "stage=2" in log_path.read_text()
    checkpoint = load_checkpoint(path)
    assert checkpoint.ema is not None
    assert checkpoint.grid == (
        gaussian_library.grid.grid_min,
        gaussian_library.grid.step,
        gaussian_library.grid.length,
    )


def test_run_stage2_is_deterministic(
    gaussian_library, tiny_config, mix_config, train_config
):
    histories = []
    for _ in range(2):
        model = Decomposer(replace(tiny_config, dropout=0.1), seed=0)
        result = run_stage2(gaussian_library, model, train_config, mix_cfg=mix_config)
        histories.append(result.losses)
    assert histories[0] == histories[1]


def test_slot_count_mismatch(gaussian_library, tiny_config, train_config):
    mix_cfg = MixConfig(k_max=4)
    with pytest.raises(IncompatibleCheckpoint):
        run_stage2(
            gaussian_library, Decomposer(tiny_config), train_config, mix_cfg=mix_cfg
        )


@pytest.mark.slow
def test_overfit_fixed_samples():
    """Test that the toy network fits 32 fixed two-phase mixtures"""
    model_cfg = ModelConfig.toy()
    grid = Grid(10.0, 70.0 / model_cfg.L, model_cfg.L)
    x = grid.two_theta
    rng = np.random.default_rng(1)
    patterns = {}
    for i in range(8):
        centers = rng.uniform(14.0, 76.0, 3)
        y = sum(np.exp(-0.5 * ((x - c) / 0.6) ** 2) for c in centers)
        patterns[f"phase_{i}"] = DiffractionPattern.on_grid(grid, y)
    mix_cfg = MixConfig(
        n_min=2, n_max=2, k_max=model_cfg.k_max, noise_sigma=0.0, n_samples=32
    )
    samples = epoch_mixtures(ReferenceLibrary(patterns), 1, 0, mix_cfg)

    cfg = TrainConfig(
        pretrain_epochs=2,
        epochs=300,
        warmup_epochs=1,
        batch_size=8,
        lr=1e-3,
        freeze_global_encoder=False,
    )
    model = Decomposer(model_cfg, seed=0)
    result = run_stage2(None, model, cfg, mix_cfg=mix_cfg, samples=samples)
    assert result.losses[-1] < result.losses[0]

    summary = evaluate_run(result.model, samples).summary()
    assert summary["pearson"] >= 0.95
    assert summary["mix_l1"] <= 0.02
