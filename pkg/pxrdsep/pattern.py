from dataclasses import dataclass

import numpy as np
import pandas as pd

from pxrdsep.errors import GridMismatch, LengthMismatch, NegativeInput

# Grid metadata agreeing to within this tolerance is considered equal
GRID_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Grid:
    """
    Uniform 2θ sampling grid with points at ``grid_min + i·step``, i = 0..L−1.
    """

    grid_min: float
    step: float
    length: int

    def __post_init__(self):
        object.__setattr__(self, "grid_min", float(self.grid_min))
        object.__setattr__(self, "step", float(self.step))
        object.__setattr__(self, "length", int(self.length))
        if not self.step > 0.0:
            raise ValueError(f"Grid step must be positive: {self.step}")
        if self.length < 1:
            raise ValueError(f"Grid length must be at least 1: {self.length}")

    @classmethod
    def from_range(cls, two_theta_min, two_theta_max, step):
        """
        Construct the half-open grid covering ``[two_theta_min, two_theta_max)``.

        Raises
        ------
        ValueError
            If the range width is not a multiple of ``step`` within 1e-9
        """
        width = (two_theta_max - two_theta_min) / step
        length = int(round(width))
        if length < 1 or abs(width - length) > GRID_TOLERANCE * max(1.0, width):
            raise ValueError(
                f"Range ({two_theta_min}, {two_theta_max}) is not divisible by "
                f"step {step}"
            )
        return cls(two_theta_min, step, length)

    @property
    def two_theta(self):
        return self.grid_min + self.step * np.arange(self.length)

    @property
    def grid_max(self):
        """Last sampled angle"""
        return self.grid_min + self.step * (self.length - 1)

    def is_compatible(self, other):
        return (
            self.length == other.length
            and abs(self.grid_min - other.grid_min) <= GRID_TOLERANCE
            and abs(self.step - other.step) <= GRID_TOLERANCE
        )

    def index_of(self, two_theta):
        """Nearest grid index to an angle, not clipped to the grid"""
        return int(np.round((two_theta - self.grid_min) / self.step))


class DiffractionPattern:
    """
    Intensity vector sampled on a uniform 2θ grid.

    Parameters
    ----------
    grid_min : float
        First sampled angle in degrees
    grid_step : float
        Sampling interval in degrees
    intensities : array
        Non-negative intensities
    """

    __slots__ = ("grid", "intensities")

    def __init__(self, grid_min, grid_step, intensities):
        values = np.array(intensities, dtype=np.float64)
        if values.ndim != 1:
            raise ValueError(
                f"Expected a 1-D intensity vector, got shape {values.shape}"
            )
        if np.any(values < 0.0) or not np.all(np.isfinite(values)):
            raise NegativeInput("Pattern intensities must be finite and non-negative")
        values.setflags(write=False)
        self.grid = Grid(grid_min, grid_step, len(values))
        self.intensities = values

    @classmethod
    def on_grid(cls, grid, intensities):
        return cls(grid.grid_min, grid.step, intensities)

    @classmethod
    def zeros(cls, grid):
        return cls.on_grid(grid, np.zeros(grid.length))

    @property
    def grid_min(self):
        return self.grid.grid_min

    @property
    def grid_step(self):
        return self.grid.step

    @property
    def two_theta(self):
        return self.grid.two_theta

    def __len__(self):
        return self.grid.length

    def __repr__(self):
        return (
            f"DiffractionPattern(grid_min={self.grid_min}, "
            f"grid_step={self.grid_step}, L={len(self)}, max={self.max():.6g})"
        )

    def __eq__(self, other):
        if not isinstance(other, DiffractionPattern):
            return NotImplemented
        return self.grid.is_compatible(other.grid) and np.array_equal(
            self.intensities, other.intensities
        )

    __hash__ = None

    def max(self):
        return float(self.intensities.max()) if len(self) else 0.0

    def check_compatible(self, other):
        """
        Raise if ``other`` is not sampled on the same grid.

        Raises
        ------
        LengthMismatch
            If the lengths differ
        GridMismatch
            If grid_min or grid_step differ by more than 1e-9
        """
        if len(self) != len(other):
            raise LengthMismatch(
                f"Pattern lengths differ: {len(self)} and {len(other)}"
            )
        if not self.grid.is_compatible(other.grid):
            raise GridMismatch(f"Grids differ: {self.grid} and {other.grid}")

    def scaled(self, factor):
        return DiffractionPattern.on_grid(self.grid, self.intensities * factor)

    def normalized(self):
        """Copy scaled to maximum 1; all-zero patterns are returned unchanged"""
        peak = self.max()
        if peak <= 0.0:
            return self
        return self.scaled(1.0 / peak)

    def to_frame(self):
        return pd.DataFrame({"TwoTheta": self.two_theta, "I": self.intensities})


class PeakList:
    """
    Per-reflection peak positions, integrated intensities and widths.

    Entries are kept sorted by angle.
    """

    __slots__ = ("two_theta", "intensity", "fwhm")

    def __init__(self, two_theta=(), intensity=(), fwhm=()):
        two_theta = np.asarray(two_theta, dtype=np.float64)
        intensity = np.asarray(intensity, dtype=np.float64)
        fwhm = np.asarray(fwhm, dtype=np.float64)
        if not (two_theta.shape == intensity.shape == fwhm.shape):
            raise LengthMismatch("PeakList columns must have equal length")
        if np.any(intensity < 0.0):
            raise NegativeInput("Peak intensities must be non-negative")
        if np.any(fwhm <= 0.0):
            raise ValueError("Peak widths must be positive")
        order = np.argsort(two_theta, kind="stable")
        self.two_theta = two_theta[order]
        self.intensity = intensity[order]
        self.fwhm = fwhm[order]

    def __len__(self):
        return len(self.two_theta)

    def __iter__(self):
        return iter(zip(self.two_theta, self.intensity, self.fwhm))

    def __repr__(self):
        return f"PeakList(n={len(self)})"

    def to_frame(self):
        return pd.DataFrame(
            {"TwoTheta": self.two_theta, "I": self.intensity, "FWHM": self.fwhm}
        )
