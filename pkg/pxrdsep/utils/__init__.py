# Public API for `pxrdsep.utils`
__all__ = [
    "compute_dHKL",
    "generate_reciprocal_cell",
    "hkl_limit",
    "reciprocal_metric",
    "enumerate_reflections",
    "reflections_to_frame",
    "structure_factor",
    "structure_factors",
    "compute_multiplicity",
    "pearson",
    "weighted_pearsonr",
    "eV2Angstroms",
    "nm2Angstroms",
]

from pxrdsep.utils.cell import (
    compute_dHKL,
    generate_reciprocal_cell,
    hkl_limit,
    reciprocal_metric,
)
from pxrdsep.utils.math import angle_between
from pxrdsep.utils.reflections import enumerate_reflections, reflections_to_frame
from pxrdsep.utils.stats import pearson, weighted_pearsonr
from pxrdsep.utils.structurefactors import structure_factor, structure_factors
from pxrdsep.utils.symmetry import compute_multiplicity
from pxrdsep.utils.units import eV2Angstroms, nm2Angstroms
