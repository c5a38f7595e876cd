import logging
import zlib
from dataclasses import dataclass, replace
from typing import Tuple

import numpy as np

from pxrdsep.algorithms.background import polynomial_background
from pxrdsep.algorithms.physics import (
    debye_temperature_M,
    debye_waller,
    lp_factor,
    march_dollase,
    scherrer_fwhm,
)
from pxrdsep.algorithms.profiles import (
    DEFAULT_ETA,
    convolve_same,
    geometry_kernel,
    profile_matrix,
    smoothing_kernel,
)
from pxrdsep.errors import (
    LengthMismatch,
    NegativeInput,
    NoReflectionsInRange,
)
from pxrdsep.pattern import DiffractionPattern, Grid, PeakList
from pxrdsep.utils.cell import reciprocal_metric
from pxrdsep.utils.elements import atomic_mass
from pxrdsep.utils.reflections import enumerate_reflections
from pxrdsep.utils.structurefactors import structure_factors
from pxrdsep.utils.symmetry import hkl_images
from pxrdsep.utils.units import CU_KALPHA, eV2Angstroms

logger = logging.getLogger("ps.simulate")

# Parameter ranges sampled per render: name -> (low, high)
SIM_RANGES = {
    "crystallite_size": (10.0, 120.0),
    "thermal_B": (0.01, 0.2),
    "zero_shift": (0.0, 0.2),
    "detector_distance": (300.0, 600.0),
    "slit_half_height": (3.0, 8.0),
    "sample_half_height": (1.0, 4.0),
}

# Peaks rendered per block of the profile matrix
_CHUNK = 256


@dataclass(frozen=True)
class SimConfig:
    """
    Conditions for rendering a single-phase pattern.

    Lengths are in Å unless noted; angles are in degrees 2θ.

    Attributes
    ----------
    wavelength : float
        X-ray wavelength (Cu Kα by default)
    energy_ev : float
        Photon energy in eV; when positive it overrides ``wavelength``
    two_theta_min, two_theta_max, step : float
        Half-open grid ``[min, max)`` sampled every ``step``
    crystallite_size : float
        Scherrer crystallite size in nm, within [10, 120]
    thermal_B : float
        Isotropic displacement parameter in Å², within [0.01, 0.2]
    thermal_model : str
        "isotropic" (uses ``thermal_B``) or "debye" (per-atom Debye model)
    temperature, debye_temperature : float
        Sample and Debye temperatures in K for the "debye" model
    zero_shift : float
        Instrument 2θ offset, within [0, 0.2]
    detector_distance : float
        Goniometer radius in mm, within [300, 600]
    slit_half_height, sample_half_height : float
        Axial extents in mm, within [3, 8] and [1, 4]
    geometry_kappa : float
        Scale of the axial-divergence kernel width
    smoothing_sigma : float
        Width of the Gaussian smoothing kernel in degrees
    background_order : int
        Degree of the polynomial background
    background_amplitude : float
        Background maximum as a fraction of the pattern maximum
    noise_ratio : float
        Standard deviation of white noise as a fraction of the pattern maximum
    preferred_orientation : bool
        Apply the March-Dollase correction
    march_dollase_r : float
        March-Dollase parameter when ``preferred_orientation`` is set
    orientation_axis : tuple of int
        Preferred-orientation direction in reciprocal-lattice coordinates
    exact_voigt : bool
        Use the numerical Voigt instead of the pseudo-Voigt
    profile_eta : float
        Lorentzian fraction of the pseudo-Voigt
    scale : float
        Overall scale factor S
    seed : int
        Seed of the render's random stream
    """

    wavelength: float = CU_KALPHA
    energy_ev: float = 0.0
    two_theta_min: float = 10.0
    two_theta_max: float = 80.0
    step: float = 0.02
    crystallite_size: float = 50.0
    thermal_B: float = 0.05
    thermal_model: str = "isotropic"
    temperature: float = 298.0
    debye_temperature: float = 300.0
    zero_shift: float = 0.0
    detector_distance: float = 450.0
    slit_half_height: float = 5.0
    sample_half_height: float = 2.0
    geometry_kappa: float = 0.02
    smoothing_sigma: float = 0.01
    background_order: int = 6
    background_amplitude: float = 0.05
    noise_ratio: float = 0.02
    preferred_orientation: bool = False
    march_dollase_r: float = 0.15
    orientation_axis: Tuple[int, int, int] = (0, 0, 1)
    exact_voigt: bool = False
    profile_eta: float = DEFAULT_ETA
    scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "orientation_axis", tuple(self.orientation_axis))
        for name, (lo, hi) in SIM_RANGES.items():
            value = getattr(self, name)
            if not lo <= value <= hi:
                raise ValueError(f"{name} must lie in [{lo}, {hi}]: {value}")
        if self.thermal_model not in ("isotropic", "debye"):
            raise ValueError(f"Unknown thermal model: {self.thermal_model!r}")
        if not self.wavelength > 0.0 or self.energy_ev < 0.0:
            raise ValueError("Wavelength must be positive and energy non-negative")
        if self.scale <= 0.0:
            raise ValueError(f"Scale factor must be positive: {self.scale}")
        if min(self.background_amplitude, self.noise_ratio, self.smoothing_sigma) < 0:
            raise ValueError("Background, noise and smoothing widths must be >= 0")
        if not 0.0 <= self.profile_eta <= 1.0:
            raise ValueError(f"profile_eta must lie in [0, 1]: {self.profile_eta}")
        # Validates step and range divisibility
        self.grid

    @property
    def grid(self):
        return Grid.from_range(self.two_theta_min, self.two_theta_max, self.step)

    @property
    def effective_wavelength(self):
        if self.energy_ev > 0.0:
            return eV2Angstroms(self.energy_ev)
        return self.wavelength


def structure_key(structure_id):
    """Stable 32-bit key of a structure id for seeding"""
    return zlib.crc32(str(structure_id).encode("utf-8"))


def render_rng(cfg, structure_id):
    """Private random stream of one render"""
    return np.random.default_rng([cfg.seed, structure_key(structure_id)])


def sample_sim_config(rng, base=None, fixed=()):
    """
    Draw per-render simulation conditions uniformly within ``SIM_RANGES``.

    Parameters
    ----------
    rng : np.random.Generator
        Random source
    base : SimConfig (optional)
        Fixed settings for every other field
    fixed : iterable of str
        Sampled fields that keep their ``base`` value. The same numbers are
        drawn either way, so the other conditions do not change.

    Returns
    -------
    SimConfig
        Copy of ``base`` with sampled sizes, thermal factor, zero shift and
        goniometer geometry, and a fresh seed
    """
    base = SimConfig() if base is None else base
    draws = {name: float(rng.uniform(lo, hi)) for name, (lo, hi) in SIM_RANGES.items()}
    seed = int(rng.integers(2**31 - 1))
    for name in fixed:
        draws.pop(name, None)
    return replace(base, seed=seed, **draws)


def _orientation_factors(structure, H, cfg, Gstar):
    if not cfg.preferred_orientation:
        return np.ones(len(H))
    factors = np.empty(len(H))
    images = hkl_images(H, structure.point_group)
    for i, family in enumerate(images):
        members = np.unique(family, axis=0)
        factors[i] = march_dollase(
            members, Gstar, cfg.orientation_axis, cfg.march_dollase_r
        ).mean()
    return factors


def reflection_intensities(structure, cfg):
    """
    Integrated intensity and width of every reflection family in range.

    Returns
    -------
    PeakList
        Angles, integrated intensities ``S·|F|²·LP·P·O·D`` and Scherrer widths

    Raises
    ------
    NoReflectionsInRange
        If no reflection falls inside the scan range
    """
    wavelength = cfg.effective_wavelength
    reflections = enumerate_reflections(
        structure, wavelength, (cfg.two_theta_min, cfg.two_theta_max)
    )
    if len(reflections) == 0:
        raise NoReflectionsInRange(
            f"Structure {structure.id!r} has no reflections in "
            f"[{cfg.two_theta_min}, {cfg.two_theta_max}] at λ = {wavelength} Å"
        )

    H = np.array([r.hkl for r in reflections])
    two_theta = np.array([r.two_theta for r in reflections])
    q_mag = np.array([r.q_mag for r in reflections])
    mult = np.array([r.multiplicity for r in reflections], dtype=np.float64)
    theta = 0.5 * two_theta

    if cfg.thermal_model == "debye":
        masses = [atomic_mass(e) for e in structure.elements]
        M = np.stack(
            [
                debye_temperature_M(
                    cfg.temperature, cfg.debye_temperature, m, theta, wavelength
                )
                for m in masses
            ],
            axis=-1,
        )
        F = structure_factors(structure, H, q_mag, debye_M=M)
        damping = np.ones(len(H))
    else:
        F = structure_factors(structure, H, q_mag)
        damping = debye_waller(theta, wavelength, cfg.thermal_B)

    Gstar = reciprocal_metric(structure.lattice)
    orientation = _orientation_factors(structure, H, cfg, Gstar)
    intensity = (
        cfg.scale * np.abs(F) ** 2 * lp_factor(theta) * mult * orientation * damping
    )
    fwhm = scherrer_fwhm(cfg.crystallite_size, wavelength, theta)
    return PeakList(two_theta, intensity, fwhm)


def render_pattern(structure, cfg):
    """
    Simulate the powder pattern of one structure.

    The chain is: reflection enumeration, per-reflection intensities
    ``S·|F|²·LP·P·O·D``, line profiles with Scherrer widths, convolution with
    the axial-divergence and Gaussian smoothing kernels, a polynomial
    background, the zero shift, white noise and a final clamp at zero.

    Parameters
    ----------
    structure : CrystalStructure
        Fully expanded structure
    cfg : SimConfig
        Rendering conditions, including the seed

    Returns
    -------
    (DiffractionPattern, PeakList)
        The rendered pattern and the pre-convolution reflection list

    Raises
    ------
    NoReflectionsInRange
        If no reflection falls inside the scan range
    """
    grid = cfg.grid
    two_theta = grid.two_theta
    rng = render_rng(cfg, structure.id)
    peaks = reflection_intensities(structure, cfg)

    y = np.zeros(grid.length)
    for start in range(0, len(peaks), _CHUNK):
        stop = start + _CHUNK
        profiles = profile_matrix(
            two_theta,
            peaks.two_theta[start:stop],
            peaks.fwhm[start:stop],
            exact=cfg.exact_voigt,
            eta=cfg.profile_eta,
        )
        y += peaks.intensity[start:stop] @ profiles

    y = convolve_same(
        y,
        geometry_kernel(
            grid.step,
            cfg.detector_distance,
            cfg.slit_half_height,
            cfg.sample_half_height,
            cfg.geometry_kappa,
        ),
    )
    y = convolve_same(y, smoothing_kernel(grid.step, cfg.smoothing_sigma))

    top = y.max()
    y = y + polynomial_background(
        grid.length, cfg.background_order, cfg.background_amplitude * top, rng
    )
    if cfg.zero_shift != 0.0:
        y = np.interp(two_theta - cfg.zero_shift, two_theta, y, left=0.0, right=0.0)
    if cfg.noise_ratio > 0.0:
        y = y + rng.normal(0.0, cfg.noise_ratio * y.max(), grid.length)
    y = np.maximum(y, 0.0)

    logger.debug(
        f"Rendered {structure.id}: {len(peaks)} reflections, max {y.max():.4g}"
    )
    return DiffractionPattern.on_grid(grid, y), peaks


def superpose(patterns, weights):
    """
    Weighted pointwise sum ``Σ w_i x_i`` of patterns on one grid.

    Parameters
    ----------
    patterns : sequence of DiffractionPattern
    weights : sequence of float
        Non-negative weights; no renormalization is applied

    Returns
    -------
    DiffractionPattern

    Raises
    ------
    LengthMismatch
        If the counts of patterns and weights differ, or pattern lengths differ
    GridMismatch
        If the grids differ
    """
    patterns = list(patterns)
    weights = [float(w) for w in weights]
    if len(patterns) == 0 or len(patterns) != len(weights):
        raise LengthMismatch(
            f"Cannot superpose {len(patterns)} patterns with {len(weights)} weights"
        )
    if any(w < 0.0 for w in weights):
        raise NegativeInput(f"Superposition weights must be non-negative: {weights}")
    first = patterns[0]
    out = np.zeros(len(first))
    for pattern, w in zip(patterns, weights):
        first.check_compatible(pattern)
        out += w * pattern.intensities
    return DiffractionPattern.on_grid(first.grid, out)
