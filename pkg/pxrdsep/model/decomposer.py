"""
Slot-based decomposition network.

A mixture pattern passes through a strided convolutional analyzer, an
attention encoder shared with the pretraining task, and a set of learnable
phase queries. Each query summarizes the latent sequence into an activity
and a pair of feature-wise modulation vectors; the modulated sequence is
decoded back to full resolution with skip connections into one mask per
slot, and each component is the mask applied to the input.
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from pxrdsep.autograd import ops
from pxrdsep.autograd.tensor import Tensor, as_tensor, expand, no_grad, parameter
from pxrdsep.errors import ShapeMismatch
from pxrdsep.model.config import ModelConfig
from pxrdsep.model.layers import (
    Conv1d,
    EncoderLayer,
    LayerNorm,
    Linear,
    Module,
    ModuleList,
    MultiHeadAttention,
    broadcast_rows,
    sinusoidal_positions,
)

logger = logging.getLogger("ps.model")

QUERY_INIT_STD = 0.02


class LocalAnalyzer(Module):
    """Strided convolution stages; every stage output is kept as a skip"""

    def __init__(self, cfg, rng):
        super().__init__()
        self.stages = ModuleList()
        c_prev = 1
        for c, k, s in zip(cfg.conv_channels, cfg.conv_kernels, cfg.conv_strides):
            self.stages.append(Conv1d(c_prev, c, k, rng, stride=s))
            c_prev = c

    def __call__(self, x):
        h = x.reshape(1, x.shape[-1])
        skips = []
        for stage in self.stages:
            h = ops.gelu(stage(h))
            skips.append(h)
        return h, skips


class GlobalEncoder(Module):
    """Input projection, pre-norm attention layers and a final norm"""

    def __init__(self, cfg, rng):
        super().__init__()
        D = cfg.d_model
        self.input_proj = Linear(D, D, rng)
        self.layers = ModuleList(
            EncoderLayer(D, cfg.n_heads, cfg.ff_mult, rng, cfg.dropout)
            for _ in range(cfg.n_layers)
        )
        self.norm = LayerNorm(D)

    def __call__(self, h, rng=None):
        z = self.input_proj(h)
        for layer in self.layers:
            z = layer(z, rng)
        return self.norm(z)


@dataclass(frozen=True)
class SlotOutputs:
    """Slot summaries and FiLM vectors (K, D); activity logits, probabilities (K,)"""

    summaries: Tensor
    logits: Tensor
    probs: Tensor
    gammas: Tensor
    betas: Tensor


class PhaseSlots(Module):
    """Learnable queries attending to the latent sequence"""

    def __init__(self, cfg, rng):
        super().__init__()
        D = cfg.d_model
        self.queries = parameter(rng.normal(0.0, QUERY_INIT_STD, (cfg.k_max, D)))
        self.attn = MultiHeadAttention(D, cfg.n_heads, rng)
        self.activity = Linear(D, 1, rng)
        self.modulation = Linear(D, 2 * D, rng)

    def __call__(self, z):
        D = z.shape[1]
        s = self.attn(self.queries, z)
        logits = self.activity(s).reshape(s.shape[0])
        film = self.modulation(s)
        return SlotOutputs(
            summaries=s,
            logits=logits,
            probs=ops.sigmoid(logits),
            gammas=film[:, :D],
            betas=film[:, D:],
        )


def slot_attend(slots, z):
    return slots(z)


def spatial_competition(z, gammas):
    """
    Softmax over slots of ``<γ_k, z_t> / sqrt(D)``.

    Parameters
    ----------
    z : Tensor
        Latent sequence (T, D)
    gammas : Tensor
        Slot gains (K, D)

    Returns
    -------
    Tensor
        Weights (K, T) whose columns sum to 1
    """
    z, gammas = as_tensor(z), as_tensor(gammas)
    scores = (gammas @ z.T) * (1.0 / np.sqrt(z.shape[1]))
    return ops.softmax(scores, axis=0)


def film_modulate(z, w, p, gammas, betas):
    """
    Feature-wise modulation of the latent sequence.

    ``α = w · p`` weighs each slot's gain and shift per position; the
    result is ``z ⊙ (1 + Σ_k α_k γ_k) + Σ_k α_k β_k``.
    """
    z, w = as_tensor(z), as_tensor(w)
    alpha = w * broadcast_rows(as_tensor(p), w.shape[1])
    gain = alpha.T @ gammas
    shift = alpha.T @ betas
    return z * (gain + 1.0) + shift


class MaskDecoder(Module):
    """
    Upsampling stages mirroring the analyzer; each stage first concatenates
    the analyzer output of matching resolution.
    """

    def __init__(self, cfg, rng):
        super().__init__()
        channels = cfg.conv_channels
        self.use_skip_fusion = cfg.use_skip_fusion
        self.strides = cfg.conv_strides
        self.entry = Conv1d(cfg.d_model, channels[-1], 1, rng)
        self.stages = ModuleList()
        for i in reversed(range(len(channels))):
            c_in = channels[i] * (2 if cfg.use_skip_fusion else 1)
            c_out = channels[max(i - 1, 0)]
            self.stages.append(Conv1d(c_in, c_out, cfg.decoder_kernel, rng))
        self.head = Conv1d(channels[0], cfg.k_max, 1, rng)

    def __call__(self, z, skips):
        d = self.entry(z.T)
        for stage, i in zip(self.stages, reversed(range(len(skips)))):
            if self.use_skip_fusion:
                d = ops.concat([d, skips[i]], axis=0)
            d = ops.upsample(ops.gelu(stage(d)), self.strides[i])
        return self.head(d)


def reconstruct(masks, x):
    """
    Components ``m_k ⊙ x`` and their sum.

    Parameters
    ----------
    masks : Tensor
        (K, L) values in [0, 1]
    x : Tensor
        (L,) input pattern

    Returns
    -------
    (Tensor, Tensor)
        Components (K, L) and reconstruction (L,)
    """
    masks, x = as_tensor(masks), as_tensor(x)
    components = masks * expand(x.reshape(1, x.shape[0]), masks.shape)
    return components, components.sum(axis=0)


@dataclass(frozen=True)
class ForwardOutput:
    """Differentiable outputs of one forward pass"""

    masks: Tensor
    components: Tensor
    reconstruction: Tensor
    slots: SlotOutputs
    competition: Tensor
    mask_logits: Tensor


@dataclass(frozen=True)
class DecompositionResult:
    """
    Decomposition of one pattern.

    Attributes
    ----------
    masks : np.ndarray
        (K_max, L) soft masks in (0, 1)
    components : np.ndarray
        (K_max, L) per-slot components, ``0 <= components <= x``
    activities : np.ndarray
        (K_max,) slot activity probabilities
    reconstruction : np.ndarray
        Sum of the components
    tau : float
        Activity threshold
    """

    masks: np.ndarray
    components: np.ndarray
    activities: np.ndarray
    reconstruction: np.ndarray
    tau: float

    @property
    def active(self) -> Tuple[int, ...]:
        return tuple(int(k) for k in np.flatnonzero(self.activities > self.tau))

    @property
    def k_max(self):
        return len(self.activities)


class Decomposer(Module):
    """
    Mixture pattern -> K_max candidate single-phase components.

    Parameters
    ----------
    cfg : ModelConfig
        Architecture
    seed : int
        Seed of the weight initialization
    """

    def __init__(self, cfg=None, seed=0):
        super().__init__()
        cfg = ModelConfig() if cfg is None else cfg
        rng = np.random.default_rng(seed)
        object.__setattr__(self, "config", cfg)
        object.__setattr__(self, "positions", sinusoidal_positions(cfg.T, cfg.d_model))
        self.analyzer = LocalAnalyzer(cfg, rng)
        self.embed = Linear(cfg.conv_channels[-1], cfg.d_model, rng)
        self.encoder = GlobalEncoder(cfg, rng)
        self.slots = PhaseSlots(cfg, rng)
        self.decoder = MaskDecoder(cfg, rng)

    def encode_local(self, x):
        x = as_tensor(x)
        if x.shape != (self.config.L,):
            raise ShapeMismatch(
                f"Expected a pattern of length {self.config.L}, got shape {x.shape}"
            )
        return self.analyzer(x)

    def encode_global(self, h, rng=None):
        tokens = self.embed(h.T) + Tensor(self.positions)
        if not self.config.use_global_encoder:
            return tokens
        return self.encoder(tokens, rng)

    def forward(self, x, rng=None):
        """
        Full differentiable pass.

        Parameters
        ----------
        x : array or Tensor
            Input pattern of length L, non-negative
        rng : np.random.Generator (optional)
            Dropout stream

        Returns
        -------
        ForwardOutput
        """
        cfg = self.config
        x = as_tensor(x)
        h, skips = self.encode_local(x)
        z = self.encode_global(h, rng)
        slots = slot_attend(self.slots, z)
        w = spatial_competition(z, slots.gammas)
        if cfg.use_modulation:
            z = film_modulate(z, w, slots.probs, slots.gammas, slots.betas)
        logits = self.decoder(z, skips)
        masks = ops.sigmoid(logits)

        if cfg.output_mode == "soft_mask":
            components, recon = reconstruct(masks, x)
        elif cfg.output_mode == "hard_mask":
            binary = ops.straight_through(masks.data > 0.5, masks)
            components, recon = reconstruct(binary, x)
        else:
            components = ops.softplus(logits)
            recon = components.sum(axis=0)
        return ForwardOutput(masks, components, recon, slots, w, logits)

    __call__ = forward

    def decompose(self, x, tau=None):
        """
        Inference pass without graph recording.

        Parameters
        ----------
        x : array
            Input pattern of length L
        tau : float (optional)
            Activity threshold; defaults to the configured one

        Returns
        -------
        DecompositionResult
        """
        tau = self.config.tau if tau is None else float(tau)
        was_training = self.training
        self.eval()
        try:
            with no_grad():
                out = self.forward(np.asarray(x, dtype=np.float64))
        finally:
            self.train(was_training)
        return DecompositionResult(
            masks=out.masks.numpy(),
            components=out.components.numpy(),
            activities=out.slots.probs.numpy(),
            reconstruction=out.reconstruction.numpy(),
            tau=tau,
        )

    def trainable_parameters(self):
        return [p for p in self.parameters() if p.requires_grad]
