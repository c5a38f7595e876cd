import numpy as np
import pytest

from pxrdsep.errors import EmptyRange, NonPositiveInput
from pxrdsep.utils import enumerate_reflections, reflections_to_frame

CU_KALPHA = 1.5406


def test_enumerate_cubic(cubic_pm3m):
    reflections = enumerate_reflections(cubic_pm3m, CU_KALPHA, (10.0, 80.0))

    first, second = reflections[:2]
    assert first.hkl == (1, 0, 0)
    assert first.multiplicity == 6
    assert np.isclose(first.d_spacing, 4.0)
    assert np.isclose(first.two_theta, 2.0 * np.rad2deg(np.arcsin(CU_KALPHA / 8.0)))
    assert second.hkl == (1, 1, 0)
    assert second.multiplicity == 12

    two_theta = np.array([r.two_theta for r in reflections])
    assert np.all(np.diff(two_theta) >= 0.0)
    assert two_theta.min() >= 10.0 and two_theta.max() <= 80.0


def test_enumerate_bragg_law(rocksalt):
    reflections = enumerate_reflections(rocksalt, CU_KALPHA, (20.0, 60.0))
    for r in reflections:
        assert np.isclose(
            CU_KALPHA, 2.0 * r.d_spacing * np.sin(np.deg2rad(r.two_theta / 2.0))
        )


def test_enumerate_total_multiplicity(cubic_pm3m, cubic_p1):
    """Grouping into families conserves the number of lattice planes"""
    grouped = enumerate_reflections(cubic_pm3m, CU_KALPHA, (10.0, 80.0))
    ungrouped = enumerate_reflections(cubic_p1, CU_KALPHA, (10.0, 80.0))
    assert sum(r.multiplicity for r in grouped) == len(ungrouped)
    assert all(r.multiplicity == 1 for r in ungrouped)


def test_enumerate_window_without_reflections(cubic_pm3m):
    assert enumerate_reflections(cubic_pm3m, CU_KALPHA, (1.0, 2.0)) == []


@pytest.mark.parametrize("window", [(80.0, 10.0), (0.0, 80.0), (10.0, 180.0)])
def test_enumerate_empty_range(cubic_p1, window):
    with pytest.raises(EmptyRange):
        enumerate_reflections(cubic_p1, CU_KALPHA, window)


def test_enumerate_wavelength(cubic_p1):
    with pytest.raises(NonPositiveInput):
        enumerate_reflections(cubic_p1, 0.0, (10.0, 80.0))


def test_reflections_to_frame(cubic_pm3m):
    reflections = enumerate_reflections(cubic_pm3m, CU_KALPHA, (10.0, 80.0))
    df = reflections_to_frame(reflections)
    assert list(df.columns) == ["H", "K", "L", "d", "TwoTheta", "Multiplicity"]
    assert len(df) == len(reflections)
    assert df["Multiplicity"].iloc[0] == 6
    assert len(reflections_to_frame([])) == 0
