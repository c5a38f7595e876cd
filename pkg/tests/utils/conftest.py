import gemmi
import pytest

from pxrdsep.structure import AtomSite, CrystalStructure, Lattice, SymmetryOp


def space_group_ops(symbol):
    """SymmetryOps of a space group, via gemmi"""
    ops = gemmi.SpaceGroup(symbol).operations()
    return tuple(SymmetryOp.from_xyz(op.triplet()) for op in ops)


@pytest.fixture
def cubic_ops():
    return space_group_ops("P m -3 m")


@pytest.fixture
def cubic_pm3m(cubic_ops):
    """Primitive cubic Cu with the full m-3m point group"""
    return CrystalStructure(
        "cubic_pm3m",
        Lattice(4.0, 4.0, 4.0, 90.0, 90.0, 90.0),
        [AtomSite("Cu", (0.0, 0.0, 0.0))],
        cubic_ops,
        221,
    )
