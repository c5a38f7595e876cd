from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.signal import find_peaks


@dataclass(frozen=True)
class PeakMeasurement:
    """Peak position and width measured on a sampled pattern (degrees)"""

    position: float
    height: float
    fwhm: float


def _half_max_crossing(y, i, half, direction):
    """Interpolated index where ``y`` falls below ``half`` walking from ``i``"""
    j = i
    while 0 <= j + direction < len(y) and y[j + direction] >= half:
        j += direction
    k = j + direction
    if not 0 <= k < len(y):
        return None
    # y[j] >= half > y[k]
    return j + direction * (y[j] - half) / (y[j] - y[k])


def detect_peaks(pattern, min_height=0.05, min_separation=0.2):
    """
    Find and measure local maxima of a pattern.

    Candidate maxima come from ``scipy.signal.find_peaks``. Positions are
    refined with a three-point parabola and widths are measured between the
    linearly interpolated half-maximum crossings on either side.

    Parameters
    ----------
    pattern : DiffractionPattern
        Pattern to analyze, usually normalized to a maximum of 1
    min_height : float
        Detection threshold as a fraction of the pattern maximum
    min_separation : float
        Minimum distance between peaks in degrees

    Returns
    -------
    list of PeakMeasurement
        Sorted by position; empty for all-zero patterns
    """
    y = np.asarray(pattern.intensities, dtype=np.float64)
    step = pattern.grid_step
    top = y.max() if len(y) else 0.0
    if top <= 0.0:
        return []

    distance = max(1, int(round(min_separation / step)))
    candidates, _ = find_peaks(y, height=min_height * top, distance=distance)

    peaks = []
    for i in candidates:
        position = pattern.grid_min + i * step
        height = y[i]
        if 0 < i < len(y) - 1:
            denom = y[i - 1] - 2.0 * y[i] + y[i + 1]
            if denom < 0.0:
                delta = 0.5 * (y[i - 1] - y[i + 1]) / denom
                position += delta * step
                height = y[i] - 0.25 * (y[i - 1] - y[i + 1]) * delta

        half = 0.5 * height
        left = _half_max_crossing(y, i, half, -1)
        right = _half_max_crossing(y, i, half, +1)
        if left is None and right is None:
            continue
        if left is None:
            left = i - (right - i)
        if right is None:
            right = i + (i - left)
        fwhm = (right - left) * step
        if fwhm > 0.0:
            peaks.append(
                PeakMeasurement(float(position), float(height), float(fwhm))
            )
    return peaks


def match_peaks(pred_peaks, true_peaks, tol=0.5):
    """
    Pair predicted peaks with reference peaks.

    Reference peaks are visited in order of descending height; each takes
    the nearest unmatched predicted peak within ``tol`` degrees. Every peak
    is used at most once.

    Parameters
    ----------
    pred_peaks, true_peaks : list of PeakMeasurement
    tol : float
        Matching tolerance in degrees

    Returns
    -------
    list of (PeakMeasurement, PeakMeasurement)
        (predicted, reference) pairs sorted by reference position
    """
    available = list(range(len(pred_peaks)))
    positions = np.array([p.position for p in pred_peaks])
    order = sorted(range(len(true_peaks)), key=lambda k: -true_peaks[k].height)

    pairs = []
    for k in order:
        if not available:
            break
        ref = true_peaks[k]
        distances = np.abs(positions[available] - ref.position)
        best = int(np.argmin(distances))
        if distances[best] <= tol:
            pairs.append((pred_peaks[available.pop(best)], ref))
    pairs.sort(key=lambda pair: pair[1].position)
    return pairs


def peak_metrics(pairs):
    """
    Mean absolute position and width deviation of matched peaks.

    Parameters
    ----------
    pairs : list of (PeakMeasurement, PeakMeasurement)

    Returns
    -------
    (float, float)
        Mean |Δ2θ| and mean |ΔFWHM| in degrees; both NaN without pairs
    """
    if len(pairs) == 0:
        return np.nan, np.nan
    shift = np.mean([abs(p.position - t.position) for p, t in pairs])
    width = np.mean([abs(p.fwhm - t.fwhm) for p, t in pairs])
    return float(shift), float(width)


def peaks_to_frame(peaks):
    """Tabulate peak measurements as a DataFrame"""
    return pd.DataFrame(
        {
            "TwoTheta": [p.position for p in peaks],
            "Height": [p.height for p in peaks],
            "FWHM": [p.fwhm for p in peaks],
        }
    )
