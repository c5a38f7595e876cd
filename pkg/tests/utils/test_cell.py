import gemmi
import numpy as np
import pytest

from pxrdsep.errors import DegenerateCell
from pxrdsep.structure import Lattice
from pxrdsep.utils import (
    compute_dHKL,
    generate_reciprocal_cell,
    hkl_limit,
    reciprocal_metric,
)


@pytest.mark.parametrize(
    "cell",
    [
        gemmi.UnitCell(10.0, 20.0, 30.0, 90.0, 90.0, 90.0),
        gemmi.UnitCell(60.0, 60.0, 90.0, 90.0, 90.0, 120.0),
        gemmi.UnitCell(30.0, 50.0, 90.0, 75.0, 80.0, 106.0),
        (5.64, 5.64, 5.64, 90.0, 90.0, 90.0),
    ],
)
def test_compute_dHKL(cell):
    """Test compute_dHKL() against gemmi"""
    hkl = generate_reciprocal_cell(cell, 4)
    result = compute_dHKL(hkl, cell)

    gemmi_cell = cell if isinstance(cell, gemmi.UnitCell) else gemmi.UnitCell(*cell)
    expected = np.array([gemmi_cell.calculate_d(list(map(int, h))) for h in hkl])

    assert np.allclose(result, expected)
    assert np.all(np.isfinite(result))


def test_reciprocal_metric_symmetric():
    Gstar = reciprocal_metric((3.0, 4.0, 5.0, 80.0, 95.0, 110.0))
    assert np.allclose(Gstar, Gstar.T)
    assert np.all(np.linalg.eigvalsh(Gstar) > 0.0)


def test_reciprocal_metric_degenerate():
    with pytest.raises(DegenerateCell):
        reciprocal_metric(Lattice(1e-3, 1e-3, 1e-3, 90.0, 90.0, 90.0))


def test_hkl_limit():
    assert hkl_limit((4.0, 4.0, 4.0, 90.0, 90.0, 90.0), 1.5406) == 6
    assert hkl_limit((2.0, 3.0, 10.0, 90.0, 90.0, 90.0), 2.0) == 10


@pytest.mark.parametrize("hmax", [1, 2, 5])
@pytest.mark.parametrize("dtype", [np.int32, np.int64])
def test_generate_reciprocal_cell(hmax, dtype):
    hkl = generate_reciprocal_cell((5.0, 5.0, 5.0, 90.0, 90.0, 90.0), hmax, dtype)
    assert hkl.dtype == dtype
    assert len(hkl) == (2 * hmax + 1) ** 3 - 1
    assert np.all(np.any(hkl != 0, axis=1))
    assert len(np.unique(hkl, axis=0)) == len(hkl)
    assert np.abs(hkl).max() == hmax
