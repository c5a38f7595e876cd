import numpy as np

from pxrdsep.autograd import ops
from pxrdsep.autograd.tensor import Tensor, expand, parameter
from pxrdsep.errors import ShapeMismatch
from pxrdsep.model.config import ModelConfig
from pxrdsep.model.decomposer import QUERY_INIT_STD, GlobalEncoder
from pxrdsep.model.layers import (
    EncoderLayer,
    LayerNorm,
    Linear,
    Module,
    sinusoidal_positions,
)


def patch_index(cfg):
    """(n_patches, patch_size) grid indices of the overlapping patches"""
    starts = np.arange(cfg.n_patches) * cfg.patch_stride
    return starts[:, None] + np.arange(cfg.patch_size)[None, :]


class MaskedPretrainer(Module):
    """
    Masked patch reconstruction around the shared attention encoder.

    Visible patches are embedded, tagged with their positions and encoded;
    a mask token fills the hidden positions before a single attention layer
    and a linear head predict every patch. Overlapping predictions are
    averaged back onto the grid.

    Parameters
    ----------
    cfg : ModelConfig
        Architecture; ``patch_size``, ``patch_stride`` and ``mask_ratio``
        define the task
    seed : int
        Seed of the weight initialization
    """

    def __init__(self, cfg=None, seed=0):
        super().__init__()
        cfg = ModelConfig() if cfg is None else cfg
        rng = np.random.default_rng(seed)
        index = patch_index(cfg)
        coverage = np.bincount(index.ravel(), minlength=cfg.L)
        object.__setattr__(self, "config", cfg)
        object.__setattr__(self, "index", index)
        object.__setattr__(self, "coverage", coverage.astype(np.float64))
        object.__setattr__(
            self, "positions", sinusoidal_positions(len(index), cfg.d_model)
        )
        D = cfg.d_model
        self.patch_embed = Linear(cfg.patch_size, D, rng)
        self.encoder = GlobalEncoder(cfg, rng)
        self.mask_token = parameter(rng.normal(0.0, QUERY_INIT_STD, (1, D)))
        self.decoder_layer = EncoderLayer(D, cfg.n_heads, cfg.ff_mult, rng)
        self.decoder_norm = LayerNorm(D)
        self.head = Linear(D, cfg.patch_size, rng)

    @property
    def n_patches(self):
        return len(self.index)

    def choose_mask(self, rng):
        """Sorted indices of ``round(mask_ratio · n_patches)`` hidden patches"""
        rng = np.random.default_rng(rng)
        chosen = rng.permutation(self.n_patches)[: self.config.n_masked]
        return np.sort(chosen)

    def masked_positions(self, masked):
        """Boolean grid mask of the points covered by hidden patches"""
        covered = np.zeros(self.config.L, dtype=bool)
        covered[self.index[masked].ravel()] = True
        return covered

    def forward(self, x, rng=None, masked=None):
        """
        Reconstruct a single-phase pattern from its visible patches.

        Parameters
        ----------
        x : array
            Normalized pattern of length L
        rng : np.random.Generator, int or None
            Source of the mask when ``masked`` is not given
        masked : array of int (optional)
            Indices of the hidden patches

        Returns
        -------
        (Tensor, np.ndarray)
            Reconstruction of length L and the hidden patch indices
        """
        cfg = self.config
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (cfg.L,):
            raise ShapeMismatch(f"Expected a pattern of length {cfg.L}, got {x.shape}")
        if masked is None:
            masked = self.choose_mask(rng)
        masked = np.sort(np.asarray(masked, dtype=np.int64))
        visible = np.setdiff1d(np.arange(self.n_patches), masked)

        patches = Tensor(x[self.index[visible]])
        tokens = self.patch_embed(patches) + Tensor(self.positions[visible])
        encoded = self.encoder(tokens)

        if len(masked):
            fill = expand(self.mask_token, (len(masked), cfg.d_model))
            stacked = ops.concat([encoded, fill], axis=0)
            inverse = np.argsort(np.concatenate([visible, masked]))
            encoded = ops.take(stacked, inverse)
        full = encoded + Tensor(self.positions)
        decoded = self.decoder_norm(self.decoder_layer(full))
        patch_values = self.head(decoded)
        folded = ops.overlap_add(patch_values, cfg.patch_stride, cfg.L)
        return folded * Tensor(1.0 / self.coverage), masked

    __call__ = forward


def mae_pretrain_forward(model, x_single, rng):
    return model.forward(x_single, rng)
