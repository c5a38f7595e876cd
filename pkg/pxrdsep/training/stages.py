"""
Two-stage training: masked-reconstruction pretraining of the attention
encoder, then decomposition training on online mixtures with the encoder
frozen.
"""

import logging
import math
import os
import time
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from pxrdsep.autograd import ops
from pxrdsep.autograd.tensor import Tensor, no_grad
from pxrdsep.errors import IncompatibleCheckpoint
from pxrdsep.io.checkpoint import save_checkpoint
from pxrdsep.mixing.sampling import default_mix_config, epoch_mixtures, sample_rng
from pxrdsep.training.losses import (
    LossWeights,
    activity_bce,
    mixture_consistency,
    pretrain_loss,
    separation_costs,
    separation_loss,
)
from pxrdsep.training.optim import EMA, AdamW, cosine_schedule
from pxrdsep.training.pit import activity_labels, best_assignment

logger = logging.getLogger("ps.training")

# Stream offsets keeping training and validation draws apart
_VALIDATION_EPOCH = 0
_ORDER_STREAM = 7919


@dataclass(frozen=True)
class TrainConfig:
    """
    Optimization settings of both stages.

    Attributes
    ----------
    pretrain_lr, lr : float
        Peak learning rates of pretraining and decomposition training
    weight_decay : float
        Decoupled weight decay
    betas : (float, float)
        Moment decay rates
    eps : float
        Optimizer denominator offset
    batch_size : int
        Samples per optimizer step
    pretrain_epochs, epochs : int
        Epochs of each stage
    warmup_epochs : int
        Linear-warmup length; the EMA starts tracking after it
    ema_decay : float
        Decay of the weight average
    freeze_global_encoder : bool
        Keep the pretrained attention encoder fixed during decomposition
        training
    seed : int
        Seed of sample order, masks and mixtures
    """

    pretrain_lr: float = 5e-4
    lr: float = 2e-4
    weight_decay: float = 0.05
    betas: Tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    batch_size: int = 8
    pretrain_epochs: int = 20
    epochs: int = 20
    warmup_epochs: int = 1
    ema_decay: float = 0.999
    freeze_global_encoder: bool = True
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        if self.pretrain_lr <= 0.0 or self.lr <= 0.0:
            raise ValueError("Learning rates must be positive")
        if not 0 <= self.warmup_epochs < min(self.epochs, self.pretrain_epochs):
            raise ValueError(
                f"warmup_epochs ({self.warmup_epochs}) must be smaller than both "
                f"stage lengths ({self.pretrain_epochs}, {self.epochs})"
            )
        if not 0.0 < self.ema_decay < 1.0:
            raise ValueError(f"ema_decay must lie in (0, 1): {self.ema_decay}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be positive: {self.batch_size}")


class TrainLog:
    """
    Append-only ``key=value`` record of a training run.

    Parameters
    ----------
    path : str or path object (optional)
        File receiving one line per record; records are only logged at
        DEBUG level when omitted
    """

    def __init__(self, path=None):
        self.path = path
        if path is not None:
            os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        self.start = time.perf_counter()

    def record(self, **fields):
        fields["wall"] = time.perf_counter() - self.start
        line = " ".join(f"{k}={_format_value(v)}" for k, v in fields.items())
        logger.debug(line)
        if self.path is not None:
            with open(self.path, "a") as f:
                f.write(line + "\n")
        return line


def _format_value(value):
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


@dataclass
class StageResult:
    """
    Outcome of a training stage.

    Attributes
    ----------
    model : Module
        Trained network (best validation weights for pretraining)
    history : list of dict
        One entry per epoch (epoch 0 holds the initial validation loss)
    ema : EMA or None
        Weight average of decomposition training
    """

    model: object
    history: List[dict] = field(default_factory=list)
    ema: Optional[EMA] = None

    @property
    def losses(self):
        return [h["train_loss"] for h in self.history if "train_loss" in h]


def _batches(n, batch_size, rng):
    order = rng.permutation(n)
    return [order[i : i + batch_size] for i in range(0, n, batch_size)]


def _order_rng(seed, stage, epoch):
    return np.random.default_rng([int(seed), _ORDER_STREAM, stage, epoch])


def pretrain_validation_loss(model, library, weights, seed):
    """Mean pretraining loss with masks fixed per pattern"""
    was_training = model.training
    model.eval()
    losses = []
    with no_grad():
        for i, crystal_id in enumerate(library.ids):
            x = library[crystal_id].intensities
            recon, masked = model(x, rng=sample_rng(_VALIDATION_EPOCH, i, seed))
            mask = model.masked_positions(masked)
            losses.append(pretrain_loss(recon, x, weights, mask).item())
    model.train(was_training)
    return float(np.mean(losses))


def run_stage1(library, model, cfg=None, weights=None, val_library=None,
               log=None, checkpoint_path=None):
    """
    Masked-reconstruction pretraining on single-phase patterns.

    Parameters
    ----------
    library : ReferenceLibrary
        Training patterns
    model : MaskedPretrainer
        Network to train in place
    cfg : TrainConfig
        Optimization settings (``pretrain_lr``, ``pretrain_epochs``)
    weights : LossWeights
        Loss weights
    val_library : ReferenceLibrary (optional)
        Held-out patterns; the training library is used when omitted
    log : TrainLog (optional)
        Structured step/epoch record
    checkpoint_path : str (optional)
        Where to save the best-validation weights

    Returns
    -------
    StageResult
    """
    cfg = TrainConfig() if cfg is None else cfg
    weights = LossWeights() if weights is None else weights
    log = TrainLog() if log is None else log
    val_library = library if val_library is None else val_library
    ids = library.ids
    n_steps = math.ceil(len(ids) / cfg.batch_size)
    total_steps = n_steps * cfg.pretrain_epochs
    warmup_steps = n_steps * cfg.warmup_epochs

    model.train()
    optimizer = AdamW(
        model.parameters(), cfg.pretrain_lr, cfg.betas, cfg.eps, cfg.weight_decay
    )
    best_loss = pretrain_validation_loss(model, val_library, weights, cfg.seed)
    best_state = model.state_dict()
    history = [{"epoch": 0, "val_loss": best_loss}]
    logger.info(
        f"Pretraining {model.n_parameters()} parameters on {len(ids)} patterns"
    )

    step = 0
    for epoch in range(1, cfg.pretrain_epochs + 1):
        epoch_losses = []
        for batch in _batches(len(ids), cfg.batch_size, _order_rng(cfg.seed, 1, epoch)):
            optimizer.zero_grad()
            batch_loss = 0.0
            for i in batch:
                x = library[ids[i]].intensities
                recon, masked = model(x, rng=sample_rng(epoch, i, cfg.seed))
                loss = pretrain_loss(recon, x, weights, model.masked_positions(masked))
                (loss * (1.0 / len(batch))).backward()
                batch_loss += loss.item() / len(batch)
            lr = cosine_schedule(step, total_steps, warmup_steps, cfg.pretrain_lr)
            optimizer.step(lr)
            step += 1
            epoch_losses.append(batch_loss)
            log.record(stage=1, epoch=epoch, step=step, loss=batch_loss, lr=lr)

        val_loss = pretrain_validation_loss(model, val_library, weights, cfg.seed)
        train_loss = float(np.mean(epoch_losses))
        history.append({"epoch": epoch, "train_loss": train_loss, "val_loss": val_loss})
        log.record(stage=1, epoch=epoch, train_loss=train_loss, val_loss=val_loss)
        if val_loss < best_loss:
            best_loss, best_state = val_loss, model.state_dict()

    model.load_state_dict(best_state)
    if checkpoint_path is not None:
        save_checkpoint(
            checkpoint_path,
            model,
            grid=library.grid,
            meta={"stage": 1, "epochs": cfg.pretrain_epochs, "val_loss": best_loss},
        )
    return StageResult(model, history)


def transfer_encoder(pretrained, model):
    """
    Copy the pretrained attention encoder into a decomposition network.

    Raises
    ------
    IncompatibleCheckpoint
        If the encoder architectures differ
    """
    src, dst = pretrained.config, model.config
    for name in ("d_model", "n_heads", "n_layers", "ff_mult"):
        if getattr(src, name) != getattr(dst, name):
            raise IncompatibleCheckpoint(
                f"Pretrained encoder has {name}={getattr(src, name)}, "
                f"model expects {getattr(dst, name)}"
            )
    model.encoder.load_state_dict(pretrained.encoder.state_dict())


def loss_total(output, targets, x, weights):
    """
    PIT-matched decomposition objective of one sample.

    Parameters
    ----------
    output : ForwardOutput
        Network outputs for input ``x``
    targets : np.ndarray
        (K, L) true per-phase contributions
    x : np.ndarray
        Input mixture
    weights : LossWeights
        Loss weights

    Returns
    -------
    (Tensor, dict, tuple of int)
        Scalar loss, weighted per-term values and the slot of each target
    """
    targets = np.asarray(targets, dtype=np.float64)
    components = output.components
    k_max = components.shape[0]
    assignment, _ = best_assignment(separation_costs(components.data, targets, weights))
    labels = activity_labels(assignment, k_max)

    matched = ops.take(components, list(assignment))
    sep = separation_loss(matched, Tensor(targets), weights).mean()
    act = activity_bce(output.slots.logits, labels) * weights.lambda_act
    mix = mixture_consistency(output.reconstruction, Tensor(x)) * weights.lambda_mix
    total = sep + act + mix
    terms = {
        "sep": sep.item(),
        "act": act.item(),
        "mix": mix.item(),
        "total": total.item(),
    }
    return total, terms, assignment


def decomposition_validation_loss(model, samples, weights):
    was_training = model.training
    model.eval()
    losses = []
    with no_grad():
        for sample in samples:
            x = sample.mixed.intensities
            _, terms, _ = loss_total(model(x), sample.contributions, x, weights)
            losses.append(terms["total"])
    model.train(was_training)
    return float(np.mean(losses))


def run_stage2(library, model, cfg=None, weights=None, mix_cfg=None,
               pretrained=None, val_library=None, samples=None, log=None,
               checkpoint_path=None):
    """
    Decomposition training with PIT-matched targets.

    Parameters
    ----------
    library : ReferenceLibrary
        Phases mixed on the fly (ignored when ``samples`` is given)
    model : Decomposer
        Network to train in place
    cfg : TrainConfig
        Optimization settings (``lr``, ``epochs``)
    weights : LossWeights
        Loss weights
    mix_cfg : MixConfig
        Mixture sampling settings
    pretrained : MaskedPretrainer (optional)
        Source of the attention-encoder weights
    val_library : ReferenceLibrary (optional)
        Phases of a fixed validation mixture set
    samples : list of MixtureSample (optional)
        Fixed training set reused every epoch
    log : TrainLog (optional)
        Structured step/epoch record
    checkpoint_path : str (optional)
        Where to save raw and EMA weights

    Returns
    -------
    StageResult
        With the EMA tracker attached
    """
    cfg = TrainConfig() if cfg is None else cfg
    weights = LossWeights() if weights is None else weights
    mix_cfg = default_mix_config(model.config.k_max) if mix_cfg is None else mix_cfg
    log = TrainLog() if log is None else log
    if mix_cfg.k_max != model.config.k_max:
        raise IncompatibleCheckpoint(
            f"Mixtures carry {mix_cfg.k_max} slots, the model {model.config.k_max}"
        )

    if pretrained is not None:
        transfer_encoder(pretrained, model)
    if cfg.freeze_global_encoder:
        model.encoder.freeze()
    model.train()
    params = model.trainable_parameters()
    logger.info(
        f"Training {model.n_parameters(trainable_only=True)} of "
        f"{model.n_parameters()} parameters"
    )
    optimizer = AdamW(params, cfg.lr, cfg.betas, cfg.eps, cfg.weight_decay)
    ema = EMA(model, cfg.ema_decay)

    n_samples = len(samples) if samples is not None else mix_cfg.n_samples
    n_steps = math.ceil(n_samples / cfg.batch_size)
    total_steps = n_steps * cfg.epochs
    warmup_steps = n_steps * cfg.warmup_epochs
    val_samples = None
    if val_library is not None:
        val_samples = epoch_mixtures(val_library, _VALIDATION_EPOCH, cfg.seed, mix_cfg)

    history = []
    step = 0
    for epoch in range(1, cfg.epochs + 1):
        if samples is None:
            epoch_samples = epoch_mixtures(library, epoch, cfg.seed, mix_cfg)
        else:
            epoch_samples = samples
        dropout_rng = _order_rng(cfg.seed, 3, epoch)
        epoch_terms = []
        order_rng = _order_rng(cfg.seed, 2, epoch)
        for batch in _batches(n_samples, cfg.batch_size, order_rng):
            optimizer.zero_grad()
            batch_terms = {}
            for i in batch:
                sample = epoch_samples[i]
                x = sample.mixed.intensities
                output = model(x, rng=dropout_rng)
                loss, terms, _ = loss_total(output, sample.contributions, x, weights)
                (loss * (1.0 / len(batch))).backward()
                for k, v in terms.items():
                    batch_terms[k] = batch_terms.get(k, 0.0) + v / len(batch)
            lr = cosine_schedule(step, total_steps, warmup_steps, cfg.lr)
            optimizer.step(lr)
            if step < warmup_steps:
                ema.reset(model)
            else:
                ema.update(model)
            step += 1
            epoch_terms.append(batch_terms)
            log.record(stage=2, epoch=epoch, step=step, lr=lr, **batch_terms)

        entry = {"epoch": epoch}
        for k in epoch_terms[0]:
            entry[k] = float(np.mean([t[k] for t in epoch_terms]))
        entry["train_loss"] = entry["total"]
        if val_samples is not None:
            entry["val_loss"] = decomposition_validation_loss(
                model, val_samples, weights
            )
        history.append(entry)
        log.record(stage=2, **entry)

    if checkpoint_path is not None:
        save_checkpoint(
            checkpoint_path,
            model,
            ema=ema.state_dict(),
            grid=library.grid if library is not None else samples[0].mixed.grid,
            meta={"stage": 2, "epochs": cfg.epochs},
        )
    return StageResult(model, history, ema)
