import numpy as np
import pytest

from pxrdsep.errors import GridMismatch, LengthMismatch, NegativeInput
from pxrdsep.pattern import DiffractionPattern, Grid, PeakList


@pytest.mark.parametrize(
    "lo,hi,step,length",
    [
        (10.0, 80.0, 70.0 / 512, 512),
        (10.0, 80.0, 0.02, 3500),
        (5.0, 6.0, 0.25, 4),
    ],
)
def test_grid_from_range(lo, hi, step, length):
    """Grid.from_range() covers the half-open range"""
    grid = Grid.from_range(lo, hi, step)
    assert grid.length == length
    assert grid.two_theta[0] == lo
    assert grid.grid_max < hi
    assert np.isclose(grid.grid_max + step, hi)


@pytest.mark.parametrize("step", [0.3, 0.07])
def test_grid_from_range_indivisible(step):
    with pytest.raises(ValueError):
        Grid.from_range(0.0, 1.0, step)


@pytest.mark.parametrize("step,length", [(0.0, 10), (-0.1, 10), (0.1, 0)])
def test_grid_invalid(step, length):
    with pytest.raises(ValueError):
        Grid(5.0, step, length)


def test_grid_compatibility():
    grid = Grid(10.0, 0.02, 100)
    assert grid.is_compatible(Grid(10.0 + 1e-12, 0.02, 100))
    assert not grid.is_compatible(Grid(10.0, 0.02, 101))
    assert not grid.is_compatible(Grid(10.01, 0.02, 100))
    assert grid.index_of(10.5) == 25
    assert grid.index_of(9.0) == -50


def test_pattern_rejects_negative(small_grid):
    values = np.zeros(small_grid.length)
    values[3] = -1e-3
    with pytest.raises(NegativeInput):
        DiffractionPattern.on_grid(small_grid, values)


def test_pattern_rejects_nonfinite(small_grid):
    values = np.zeros(small_grid.length)
    values[3] = np.nan
    with pytest.raises(NegativeInput):
        DiffractionPattern.on_grid(small_grid, values)


def test_pattern_is_read_only(gaussian_pattern):
    with pytest.raises(ValueError):
        gaussian_pattern.intensities[0] = 1.0


def test_check_compatible(small_grid, gaussian_pattern):
    shorter = DiffractionPattern(small_grid.grid_min, small_grid.step, np.ones(10))
    with pytest.raises(LengthMismatch):
        gaussian_pattern.check_compatible(shorter)

    shifted = DiffractionPattern(
        small_grid.grid_min + 0.01, small_grid.step, gaussian_pattern.intensities
    )
    with pytest.raises(GridMismatch):
        gaussian_pattern.check_compatible(shifted)

    gaussian_pattern.check_compatible(DiffractionPattern.zeros(small_grid))


def test_normalized(small_grid, gaussian_pattern):
    scaled = gaussian_pattern.scaled(7.5)
    result = scaled.normalized()
    assert np.isclose(result.max(), 1.0)
    assert np.allclose(result.intensities, gaussian_pattern.normalized().intensities)

    zeros = DiffractionPattern.zeros(small_grid)
    assert zeros.normalized() == zeros


def test_pattern_to_frame(gaussian_pattern):
    df = gaussian_pattern.to_frame()
    assert list(df.columns) == ["TwoTheta", "I"]
    assert len(df) == len(gaussian_pattern)
    assert np.allclose(df["TwoTheta"], gaussian_pattern.two_theta)


def test_peaklist_sorted():
    peaks = PeakList([30.0, 10.0, 20.0], [1.0, 2.0, 3.0], [0.1, 0.2, 0.3])
    assert np.array_equal(peaks.two_theta, [10.0, 20.0, 30.0])
    assert np.array_equal(peaks.intensity, [2.0, 3.0, 1.0])
    assert np.array_equal(peaks.fwhm, [0.2, 0.3, 0.1])
    assert len(peaks) == 3
    assert list(peaks.to_frame().columns) == ["TwoTheta", "I", "FWHM"]


def test_peaklist_invalid():
    with pytest.raises(LengthMismatch):
        PeakList([1.0, 2.0], [1.0], [0.1])
    with pytest.raises(NegativeInput):
        PeakList([1.0], [-1.0], [0.1])
    with pytest.raises(ValueError):
        PeakList([1.0], [1.0], [0.0])
