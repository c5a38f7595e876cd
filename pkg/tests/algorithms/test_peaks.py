import numpy as np
import pytest

from pxrdsep.algorithms.peaks import (
    PeakMeasurement,
    detect_peaks,
    match_peaks,
    peak_metrics,
    peaks_to_frame,
)
from pxrdsep.pattern import DiffractionPattern

SIGMA_TO_FWHM = 2.0 * np.sqrt(2.0 * np.log(2.0))


def _pattern(grid, centers, sigma=0.1):
    x = grid.two_theta
    y = sum(np.exp(-0.5 * ((x - c) / sigma) ** 2) for c in centers)
    return DiffractionPattern.on_grid(grid, y)


def test_detect_peaks(gaussian_pattern):
    peaks = detect_peaks(gaussian_pattern)
    assert len(peaks) == 2
    assert np.allclose([p.position for p in peaks], [7.0, 10.0], atol=0.005)
    assert np.allclose([p.height for p in peaks], [1.0, 0.5], atol=0.01)
    assert np.allclose([p.fwhm for p in peaks], 0.1 * SIGMA_TO_FWHM, atol=0.01)


def test_detect_peaks_threshold(gaussian_pattern):
    peaks = detect_peaks(gaussian_pattern, min_height=0.6)
    assert len(peaks) == 1


def test_detect_peaks_zero(small_grid):
    assert detect_peaks(DiffractionPattern.zeros(small_grid)) == []


def test_peak_shift(small_grid):
    """A pattern displaced by one grid step reports a 0.02° shift"""
    truth = detect_peaks(_pattern(small_grid, [7.0, 10.0]))
    pred = detect_peaks(_pattern(small_grid, [7.02, 10.02]))
    shift, width = peak_metrics(match_peaks(pred, truth))
    assert np.isclose(shift, 0.02, atol=1e-3)
    assert width < 1e-3


def test_fwhm_error(small_grid):
    """Broadening every peak by 0.1° FWHM reports a 0.1° width error"""
    sigma = 0.1
    wider = sigma + 0.1 / SIGMA_TO_FWHM
    truth = detect_peaks(_pattern(small_grid, [7.0, 10.0], sigma))
    pred = detect_peaks(_pattern(small_grid, [7.0, 10.0], wider))
    shift, width = peak_metrics(match_peaks(pred, truth))
    assert shift < 1e-3
    assert np.isclose(width, 0.1, atol=5e-3)


def test_match_peaks_tolerance():
    truth = [PeakMeasurement(10.0, 1.0, 0.1), PeakMeasurement(20.0, 0.5, 0.1)]
    pred = [PeakMeasurement(10.3, 1.0, 0.1), PeakMeasurement(21.0, 1.0, 0.1)]
    pairs = match_peaks(pred, truth, tol=0.5)
    assert len(pairs) == 1
    assert pairs[0][1].position == 10.0


def test_match_peaks_uses_each_peak_once():
    """The taller reference peak claims the shared candidate"""
    truth = [PeakMeasurement(10.0, 0.2, 0.1), PeakMeasurement(10.4, 1.0, 0.1)]
    pred = [PeakMeasurement(10.2, 1.0, 0.1)]
    pairs = match_peaks(pred, truth)
    assert len(pairs) == 1
    assert pairs[0][1].position == 10.4


def test_peak_metrics_empty():
    assert all(np.isnan(v) for v in peak_metrics([]))


def test_peaks_to_frame(gaussian_pattern):
    df = peaks_to_frame(detect_peaks(gaussian_pattern))
    assert list(df.columns) == ["TwoTheta", "Height", "FWHM"]
    assert len(df) == 2
