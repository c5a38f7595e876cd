import numpy as np
import pytest

from pxrdsep.commandline.toydata import TOY_STRUCTURES, toy_cif
from pxrdsep.io.cif import parse_structure
from pxrdsep.pattern import DiffractionPattern, Grid
from pxrdsep.structure import AtomSite, CrystalStructure, Lattice, SymmetryOp


def toy_structure(name):
    """Parse one of the built-in toy structures by name"""
    for entry in TOY_STRUCTURES:
        if entry[0] == name:
            return parse_structure(toy_cif(*entry))
    raise KeyError(name)


@pytest.fixture
def rocksalt():
    return toy_structure("toy_rocksalt")


@pytest.fixture
def toy_structures():
    """All six built-in toy structures"""
    return [parse_structure(toy_cif(*entry)) for entry in TOY_STRUCTURES]


@pytest.fixture
def toy_by_name(toy_structures):
    return {s.id: s for s in toy_structures}


@pytest.fixture
def cubic_p1():
    """Single Cu atom in a 4 Å primitive cubic cell"""
    return CrystalStructure(
        "cubic_p1",
        Lattice(4.0, 4.0, 4.0, 90.0, 90.0, 90.0),
        [AtomSite("Cu", (0.0, 0.0, 0.0))],
        (SymmetryOp.identity(),),
        1,
    )


@pytest.fixture
def small_grid():
    return Grid(5.0, 0.02, 500)


@pytest.fixture
def gaussian_pattern(small_grid):
    """Two Gaussian peaks at 7° and 10° on the small grid"""
    x = small_grid.two_theta
    y = np.exp(-0.5 * ((x - 7.0) / 0.1) ** 2) + 0.5 * np.exp(
        -0.5 * ((x - 10.0) / 0.1) ** 2
    )
    return DiffractionPattern.on_grid(small_grid, y)


@pytest.fixture
def tiny_config():
    """Network small enough for fast forward and backward passes"""
    from pxrdsep.model import ModelConfig

    return ModelConfig.toy(
        L=64,
        d_model=16,
        n_heads=2,
        n_layers=1,
        conv_channels=(4, 8),
        conv_kernels=(3, 2),
        conv_strides=(1, 2),
        patch_size=16,
        patch_stride=8,
        k_max=3,
    )


@pytest.fixture
def tiny_grid(tiny_config):
    return Grid(10.0, 70.0 / tiny_config.L, tiny_config.L)


@pytest.fixture
def gaussian_library(tiny_grid):
    """Six synthetic phases with distinct peak positions"""
    from pxrdsep.mixing.library import ReferenceLibrary

    centers = [(15, 40), (20, 55), (25, 70), (30, 45, 60), (35, 75), (50, 65)]
    x = tiny_grid.two_theta
    patterns = {}
    for i, peaks in enumerate(centers):
        y = sum(np.exp(-0.5 * ((x - c) / 1.5) ** 2) for c in peaks)
        patterns[f"phase_{i}"] = DiffractionPattern.on_grid(tiny_grid, y)
    return ReferenceLibrary(patterns)


@pytest.fixture
def mix_config(tiny_config):
    from pxrdsep.mixing.sampling import MixConfig

    return MixConfig(n_min=2, n_max=3, k_max=tiny_config.k_max, n_samples=4)


@pytest.fixture
def mixture_samples(gaussian_library, mix_config):
    """Four reproducible mixtures of the Gaussian library"""
    from pxrdsep.mixing.sampling import epoch_mixtures

    return epoch_mixtures(gaussian_library, 1, 0, mix_config)
