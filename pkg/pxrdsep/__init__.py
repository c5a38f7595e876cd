import os


# Version number for pxrdsep
def getVersionNumber():
    path = os.path.join(os.path.dirname(__file__), "VERSION")
    with open(path) as f:
        return f.read().strip()


__version__ = getVersionNumber()

# Import submodules
from pxrdsep import algorithms, evaluation, io, mixing, model, training, utils

# Top-Level API
from pxrdsep.config import RunConfig, load_config, parse_config
from pxrdsep.errors import PxrdsepError
from pxrdsep.io import read_pattern, read_structure, write_pattern
from pxrdsep.model import Decomposer, MaskedPretrainer, ModelConfig
from pxrdsep.pattern import DiffractionPattern, Grid, PeakList
from pxrdsep.structure import CrystalStructure, Lattice
