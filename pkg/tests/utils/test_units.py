import numpy as np

from pxrdsep.utils import angle_between, eV2Angstroms, nm2Angstroms


def test_eV2Angstroms():
    ev = np.linspace(1000.0, 50000.0, 1000)
    angstroms = eV2Angstroms(ev)
    assert np.allclose(ev * angstroms, 12398.41984332)


def test_nm2Angstroms():
    assert np.allclose(nm2Angstroms([1.0, 25.5]), [10.0, 255.0])


def test_angle_between():
    assert np.isclose(angle_between(np.array([1.0, 0, 0]), np.array([0, 2.0, 0])), 90.0)
    vec = np.array([[1.0, 1.0, 0.0]])
    assert np.allclose(angle_between(vec, vec, deg=False), 0.0)
