"""
Online synthesis of multiphase training mixtures.
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from pxrdsep.algorithms.simulate import superpose
from pxrdsep.decorators import rngify
from pxrdsep.errors import (
    InfeasibleFloor,
    InsufficientLibrary,
    RejectionLimitExceeded,
    UnknownAnchor,
)
from pxrdsep.pattern import DiffractionPattern

logger = logging.getLogger("ps.mixing")


@dataclass(frozen=True)
class MixConfig:
    """
    Mixture sampling settings.

    Attributes
    ----------
    n_min, n_max : int
        Range of the number of phases per mixture (inclusive)
    k_max : int
        Number of component slots; components are zero-padded to this count
    alpha : float
        Concentration of the symmetric Dirichlet weight distribution
    weight_floor : float
        Minimum weight of every phase
    noise_sigma : float
        Standard deviation of additive noise as a fraction of the mixture max
    max_attempts : int
        Rejection-sampling cap for the weights
    n_samples : int
        Mixtures generated per epoch (or written by ``pxrdsep mix``)
    """

    n_min: int = 2
    n_max: int = 4
    k_max: int = 4
    alpha: float = 1.0
    weight_floor: float = 0.15
    noise_sigma: float = 0.01
    max_attempts: int = 10000
    n_samples: int = 64

    def __post_init__(self):
        if not 1 <= self.n_min <= self.n_max <= self.k_max:
            raise ValueError(
                f"Expected 1 <= n_min <= n_max <= k_max: "
                f"{self.n_min}, {self.n_max}, {self.k_max}"
            )
        if self.alpha <= 0.0 or self.noise_sigma < 0.0 or self.weight_floor < 0.0:
            raise ValueError("alpha must be positive; noise and floor non-negative")


@dataclass(frozen=True)
class MixtureSample:
    """
    One synthetic mixture with its ground truth.

    Attributes
    ----------
    mixed : DiffractionPattern
        Noisy mixture divided by the shared factor
    components : tuple of DiffractionPattern
        ``k_max`` single-phase patterns divided by the shared factor; the
        slots past ``active_count`` are all-zero
    weights : np.ndarray
        Mixing fractions of the active phases
    active_count : int
        Number of phases N
    component_ids : tuple of str
        Crystal ids of the active phases, anchor first
    noise_sigma : float
        Noise level used, as a fraction of the mixture max
    seed : tuple of int
        (epoch, index, seed) key of the sample's random stream
    """

    mixed: DiffractionPattern
    components: Tuple[DiffractionPattern, ...]
    weights: np.ndarray
    active_count: int
    component_ids: Tuple[str, ...]
    noise_sigma: float
    seed: Tuple[int, ...]

    @property
    def k_max(self):
        return len(self.components)

    @property
    def contributions(self):
        """Per-phase terms ``w_i·x_i`` (N x L); they sum to the noiseless mixture"""
        stack = np.stack([c.intensities for c in self.components[: self.active_count]])
        return self.weights[:, None] * stack

    def component_matrix(self):
        return np.stack([c.intensities for c in self.components])


def sample_rng(epoch, index, seed):
    """Random stream of one mixture, independent of generation order"""
    return np.random.default_rng([int(seed), int(epoch), int(index)])


@rngify
def sample_cardinality(rng=None, n_min=2, n_max=4):
    """Number of phases, uniform on ``{n_min, ..., n_max}``"""
    return int(rng.integers(n_min, n_max + 1))


@rngify
def sample_weights(N, alpha=1.0, floor=0.15, rng=None, max_attempts=10000):
    """
    Draw mixing fractions from a symmetric Dirichlet with a minimum share.

    Dirichlet vectors are formed by normalizing independent gamma draws
    (unit-rate exponentials for ``alpha = 1``) and rejected until every
    weight is at least ``floor``.

    Parameters
    ----------
    N : int
        Number of phases
    alpha : float
        Concentration parameter
    floor : float
        Minimum weight
    rng : np.random.Generator, int or None
        Random source
    max_attempts : int
        Number of draws before giving up

    Returns
    -------
    np.ndarray
        Length N weights summing to 1

    Raises
    ------
    InfeasibleFloor
        If ``N·floor >= 1``
    RejectionLimitExceeded
        If no draw is accepted within ``max_attempts``
    """
    if N * floor >= 1.0:
        raise InfeasibleFloor(
            f"Cannot give {N} phases a weight of at least {floor} each"
        )
    if alpha <= 0.0:
        raise ValueError(f"Dirichlet concentration must be positive: {alpha}")
    for _ in range(max_attempts):
        if alpha == 1.0:
            draws = rng.standard_exponential(N)
        else:
            draws = rng.standard_gamma(alpha, N)
        weights = draws / draws.sum()
        if weights.min() >= floor:
            return weights
    raise RejectionLimitExceeded(
        f"No Dirichlet({alpha}) draw with all {N} weights >= {floor} "
        f"in {max_attempts} attempts"
    )


@rngify
def make_mixture(library, anchor_id, rng=None, cfg=None, key=()):
    """
    Synthesize one mixture around an anchor phase.

    Draws the number of phases N, picks N−1 other phases from the library,
    draws weights, forms ``Σ w_i x_i``, adds Gaussian noise and divides the
    mixture and every component by the shared factor
    ``max(max mixture, max_i max x_i)``.

    Parameters
    ----------
    library : ReferenceLibrary
        Phases of one split
    anchor_id : str
        Id of the anchor phase
    rng : np.random.Generator, int or None
        Random source
    cfg : MixConfig
        Sampling settings
    key : tuple of int
        Provenance recorded in ``MixtureSample.seed``

    Returns
    -------
    MixtureSample

    Raises
    ------
    UnknownAnchor
        If ``anchor_id`` is not in the library
    InsufficientLibrary
        If the library holds fewer than ``cfg.k_max`` phases
    """
    cfg = MixConfig() if cfg is None else cfg
    if anchor_id not in library:
        raise UnknownAnchor(f"Anchor {anchor_id!r} is not in the library")
    if len(library) < cfg.k_max:
        raise InsufficientLibrary(
            f"Library holds {len(library)} phases; at least {cfg.k_max} are needed"
        )

    N = sample_cardinality(rng, cfg.n_min, cfg.n_max)
    others = [i for i in library.ids if i != anchor_id]
    picks = rng.choice(len(others), size=N - 1, replace=False)
    ids = (anchor_id, *(others[i] for i in picks))
    weights = sample_weights(N, cfg.alpha, cfg.weight_floor, rng, cfg.max_attempts)

    patterns = [library[i] for i in ids]
    mixed = superpose(patterns, weights).intensities
    if cfg.noise_sigma > 0.0:
        noise = rng.normal(0.0, cfg.noise_sigma * mixed.max(), len(mixed))
        mixed = np.maximum(mixed + noise, 0.0)

    factor = max(mixed.max(), *(p.max() for p in patterns))
    if factor <= 0.0:
        factor = 1.0
    grid = library.grid
    components = [p.scaled(1.0 / factor) for p in patterns]
    components += [DiffractionPattern.zeros(grid)] * (cfg.k_max - N)
    return MixtureSample(
        mixed=DiffractionPattern.on_grid(grid, mixed / factor),
        components=tuple(components),
        weights=weights,
        active_count=N,
        component_ids=ids,
        noise_sigma=cfg.noise_sigma,
        seed=tuple(int(k) for k in key),
    )


def mixture_for_index(library, epoch, index, seed, cfg=None):
    """
    The ``index``-th mixture of ``epoch``.

    The anchor and everything else are drawn from a stream keyed by
    (epoch, index, seed), so any worker can regenerate any sample.
    """
    rng = sample_rng(epoch, index, seed)
    ids = library.ids
    anchor = ids[int(rng.integers(len(ids)))]
    return make_mixture(library, anchor, rng, cfg, key=(epoch, index, seed))


def epoch_mixtures(library, epoch, seed, cfg=None):
    cfg = MixConfig() if cfg is None else cfg
    return [
        mixture_for_index(library, epoch, i, seed, cfg) for i in range(cfg.n_samples)
    ]


def default_mix_config(k_max):
    """Default sampling settings capped to ``k_max`` slots"""
    n_max = min(MixConfig.n_max, k_max)
    return MixConfig(n_min=min(MixConfig.n_min, n_max), n_max=n_max, k_max=k_max)
