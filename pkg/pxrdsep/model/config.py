from dataclasses import asdict, dataclass, replace
from typing import Tuple

import numpy as np

from pxrdsep.errors import PatchConfigInvalid

OUTPUT_MODES = ("soft_mask", "hard_mask", "direct")


@dataclass(frozen=True)
class ModelConfig:
    """
    Architecture of the decomposition network.

    Attributes
    ----------
    L : int
        Pattern length (grid points)
    d_model : int
        Latent width
    n_heads, n_layers : int
        Attention heads and encoder depth
    ff_mult : int
        Feed-forward hidden width as a multiple of ``d_model``
    conv_channels, conv_kernels, conv_strides : tuple of int
        Stages of the convolutional analyzer
    decoder_kernel : int
        Kernel width of the decoder convolutions (odd)
    k_max : int
        Number of output slots
    patch_size, patch_stride : int
        Overlapping patches of the pretraining task
    mask_ratio : float
        Fraction of patches hidden during pretraining
    tau : float
        Activity threshold
    dropout : float
        Dropout rate inside the attention blocks during training
    use_skip_fusion, use_modulation, use_global_encoder : bool
        Ablation switches
    output_mode : str
        "soft_mask", "hard_mask" or "direct"
    """

    L: int = 512
    d_model: int = 64
    n_heads: int = 4
    n_layers: int = 2
    ff_mult: int = 2
    conv_channels: Tuple[int, ...] = (16, 32, 48, 64)
    conv_kernels: Tuple[int, ...] = (7, 4, 4, 8)
    conv_strides: Tuple[int, ...] = (1, 2, 2, 4)
    decoder_kernel: int = 3
    k_max: int = 4
    patch_size: int = 32
    patch_stride: int = 16
    mask_ratio: float = 0.70
    tau: float = 0.5
    dropout: float = 0.0
    use_skip_fusion: bool = True
    use_modulation: bool = True
    use_global_encoder: bool = True
    output_mode: str = "soft_mask"

    def __post_init__(self):
        for name in ("conv_channels", "conv_kernels", "conv_strides"):
            object.__setattr__(self, name, tuple(int(v) for v in getattr(self, name)))
        n = len(self.conv_channels)
        if n == 0 or len(self.conv_kernels) != n or len(self.conv_strides) != n:
            raise ValueError("Analyzer channels, kernels and strides must align")
        if any(k < s for k, s in zip(self.conv_kernels, self.conv_strides)):
            raise ValueError("Analyzer kernels must be at least as wide as strides")
        if self.L % self.downsampling:
            raise ValueError(
                f"Total stride {self.downsampling} does not divide L={self.L}"
            )
        if self.d_model % self.n_heads:
            raise ValueError(
                f"d_model={self.d_model} is not divisible by n_heads={self.n_heads}"
            )
        if self.k_max < 1:
            raise ValueError(f"k_max must be at least 1: {self.k_max}")
        if not 0.0 <= self.mask_ratio < 1.0:
            raise ValueError(f"mask_ratio must lie in [0, 1): {self.mask_ratio}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must lie in [0, 1): {self.dropout}")
        if self.decoder_kernel % 2 == 0:
            raise ValueError("decoder_kernel must be odd")
        if self.output_mode not in OUTPUT_MODES:
            raise ValueError(f"Unknown output mode: {self.output_mode!r}")

    @classmethod
    def toy(cls, **overrides):
        """Desk-scale network on a 512-point grid"""
        return replace(cls(), **overrides)

    @classmethod
    def full(cls, **overrides):
        """Full-scale network on the 3500-point grid"""
        return replace(
            cls(
                L=3500,
                d_model=768,
                n_heads=12,
                n_layers=4,
                conv_channels=(48, 96, 192, 384),
                conv_kernels=(15, 8, 8, 10),
                conv_strides=(1, 2, 2, 5),
                patch_size=50,
                patch_stride=25,
            ),
            **overrides,
        )

    @property
    def downsampling(self):
        return int(np.prod(self.conv_strides))

    @property
    def T(self):
        """Latent sequence length"""
        return self.L // self.downsampling

    @property
    def stage_lengths(self):
        return tuple(
            self.L // int(np.prod(self.conv_strides[: i + 1]))
            for i in range(len(self.conv_strides))
        )

    @property
    def n_patches(self):
        """
        Number of overlapping pretraining patches.

        Raises
        ------
        PatchConfigInvalid
            If the patches do not tile the pattern exactly
        """
        if self.L < self.patch_size:
            raise PatchConfigInvalid(
                f"Pattern length {self.L} is shorter than the patch ({self.patch_size})"
            )
        if self.patch_stride < 1 or (self.L - self.patch_size) % self.patch_stride:
            raise PatchConfigInvalid(
                f"Patches of {self.patch_size} at stride {self.patch_stride} "
                f"do not tile L={self.L}"
            )
        return (self.L - self.patch_size) // self.patch_stride + 1

    @property
    def n_masked(self):
        n = self.n_patches
        return min(n - 1, int(round(self.mask_ratio * n)))

    def to_dict(self):
        values = asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in values.items()}

    @classmethod
    def from_dict(cls, values):
        return cls(**values)
