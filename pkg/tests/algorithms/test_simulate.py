from dataclasses import replace

import numpy as np
import pytest

from pxrdsep.algorithms.peaks import detect_peaks
from pxrdsep.algorithms.simulate import (
    SIM_RANGES,
    SimConfig,
    reflection_intensities,
    render_pattern,
    sample_sim_config,
    structure_key,
    superpose,
)
from pxrdsep.errors import (
    GridMismatch,
    LengthMismatch,
    NegativeInput,
    NoReflectionsInRange,
)
from pxrdsep.pattern import DiffractionPattern, Grid


@pytest.fixture
def clean_config():
    """Noise-free rendering without background"""
    return SimConfig(noise_ratio=0.0, background_amplitude=0.0)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"crystallite_size": 5.0},
        {"thermal_B": 0.5},
        {"zero_shift": -0.1},
        {"detector_distance": 100.0},
        {"thermal_model": "einstein"},
        {"step": 0.03},
        {"wavelength": 0.0},
        {"profile_eta": 1.5},
        {"scale": 0.0},
    ],
)
def test_sim_config_invalid(kwargs):
    with pytest.raises(ValueError):
        SimConfig(**kwargs)


def test_sim_config_grid():
    assert SimConfig().grid == Grid(10.0, 0.02, 3500)
    assert SimConfig(step=70.0 / 512).grid.length == 512
    assert np.isclose(SimConfig(energy_ev=8047.8).effective_wavelength, 1.5406, 1e-3)


def test_structure_key():
    assert structure_key("abc") == 0x352441C2
    assert structure_key("abc") != structure_key("abd")


def test_sample_sim_config():
    base = SimConfig(noise_ratio=0.0)
    first = sample_sim_config(np.random.default_rng(3), base)
    again = sample_sim_config(np.random.default_rng(3), base)
    assert first == again
    assert first.noise_ratio == 0.0
    for name, (lo, hi) in SIM_RANGES.items():
        assert lo <= getattr(first, name) <= hi


def test_sample_sim_config_fixed():
    """Test that fixed conditions keep their value and others are unchanged"""
    base = SimConfig(crystallite_size=80.0)
    sampled = sample_sim_config(np.random.default_rng(5), base)
    held = sample_sim_config(np.random.default_rng(5), base, ["crystallite_size"])
    assert held.crystallite_size == 80.0
    assert sampled.crystallite_size != 80.0
    assert held == replace(sampled, crystallite_size=80.0)


def test_reflection_intensities(rocksalt, clean_config):
    peaks = reflection_intensities(rocksalt, clean_config)
    assert len(peaks) > 0
    assert np.all(peaks.intensity >= 0.0)
    assert np.all(np.diff(peaks.two_theta) >= 0.0)
    assert np.all(peaks.fwhm > 0.0)


def test_no_reflections(rocksalt):
    cfg = SimConfig(two_theta_min=1.0, two_theta_max=2.0)
    with pytest.raises(NoReflectionsInRange):
        render_pattern(rocksalt, cfg)


def test_render_rocksalt(rocksalt, clean_config):
    """The (200) reflection dominates rocksalt under Cu Kα"""
    pattern, peaks = render_pattern(rocksalt, clean_config)
    assert len(pattern) == 3500
    assert np.all(pattern.intensities >= 0.0)
    d200 = rocksalt.lattice.a / 2.0
    expected = 2.0 * np.rad2deg(np.arcsin(1.5406 / (2.0 * d200)))
    top = pattern.two_theta[np.argmax(pattern.intensities)]
    assert abs(top - expected) < 0.1


def test_render_cubic_111_position(cubic_p1, clean_config):
    """Test that the 111 line of a 4 Å primitive cubic cell lands at 38.97°"""
    pattern, _ = render_pattern(cubic_p1, clean_config)
    positions = np.array([p.position for p in detect_peaks(pattern)])
    nearest = positions[np.argmin(np.abs(positions - 38.97))]
    assert abs(nearest - 38.97) < 0.02


@pytest.mark.parametrize("thermal_model", ["isotropic", "debye"])
@pytest.mark.parametrize("preferred_orientation", [False, True])
def test_render_deterministic(rocksalt, thermal_model, preferred_orientation):
    cfg = SimConfig(
        thermal_model=thermal_model,
        preferred_orientation=preferred_orientation,
        zero_shift=0.1,
        seed=7,
    )
    first, _ = render_pattern(rocksalt, cfg)
    second, _ = render_pattern(rocksalt, cfg)
    assert first == second
    third, _ = render_pattern(rocksalt, replace(cfg, seed=8))
    assert first != third


def test_render_exact_voigt(rocksalt, clean_config):
    pseudo, _ = render_pattern(rocksalt, clean_config)
    exact, _ = render_pattern(
        rocksalt, SimConfig(noise_ratio=0.0, background_amplitude=0.0, exact_voigt=True)
    )
    assert np.argmax(pseudo.intensities) == np.argmax(exact.intensities)


def test_zero_shift_moves_peaks(rocksalt, clean_config):
    base, _ = render_pattern(rocksalt, clean_config)
    shifted, _ = render_pattern(
        rocksalt,
        SimConfig(noise_ratio=0.0, background_amplitude=0.0, zero_shift=0.2),
    )
    moved = np.argmax(shifted.intensities) - np.argmax(base.intensities)
    assert moved == 10


def test_superpose(small_grid, gaussian_pattern):
    flat = DiffractionPattern.on_grid(small_grid, np.ones(small_grid.length))
    result = superpose([gaussian_pattern, flat], [0.25, 0.75])
    assert np.allclose(result.intensities, 0.25 * gaussian_pattern.intensities + 0.75)


def test_superpose_invalid(small_grid, gaussian_pattern):
    with pytest.raises(LengthMismatch):
        superpose([gaussian_pattern], [0.5, 0.5])
    with pytest.raises(NegativeInput):
        superpose([gaussian_pattern], [-1.0])
    other = DiffractionPattern(5.01, 0.02, gaussian_pattern.intensities)
    with pytest.raises(GridMismatch):
        superpose([gaussian_pattern, other], [0.5, 0.5])
