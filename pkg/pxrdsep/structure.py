from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Tuple

import gemmi
import numpy as np

from pxrdsep.errors import (
    DisorderedStructure,
    InvalidLattice,
    MissingSites,
    UnsupportedElement,
)

# Fractional tolerance used to decide whether two sites coincide
SITE_TOLERANCE = 1e-4

# Distinct sites closer than this (Å) are rejected as disorder
MIN_SITE_DISTANCE = 0.1


@dataclass(frozen=True)
class Lattice:
    """
    Real-space unit cell.

    Lengths are in Å and angles in degrees.
    """

    a: float
    b: float
    c: float
    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        for name in ("a", "b", "c", "alpha", "beta", "gamma"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if min(self.a, self.b, self.c) <= 0.0:
            raise InvalidLattice(
                f"Cell lengths must be positive: {self.a}, {self.b}, {self.c}"
            )
        for angle in (self.alpha, self.beta, self.gamma):
            if not 0.0 < angle < 180.0:
                raise InvalidLattice(f"Cell angles must lie in (0, 180): {angle}")
        if not self._volume_factor() > 0.0:
            raise InvalidLattice(f"Cell angles do not form a valid cell: {self}")

    def _volume_factor(self):
        ca, cb, cg = np.cos(np.deg2rad([self.alpha, self.beta, self.gamma]))
        return 1.0 - ca * ca - cb * cb - cg * cg + 2.0 * ca * cb * cg

    @property
    def parameters(self):
        return (self.a, self.b, self.c, self.alpha, self.beta, self.gamma)

    @property
    def volume(self):
        """Cell volume in Å³"""
        return self.a * self.b * self.c * float(np.sqrt(self._volume_factor()))

    @property
    def metric_tensor(self):
        """Real-space metric tensor G in Å²"""
        ca, cb, cg = np.cos(np.deg2rad([self.alpha, self.beta, self.gamma]))
        a, b, c = self.a, self.b, self.c
        return np.array(
            [
                [a * a, a * b * cg, a * c * cb],
                [a * b * cg, b * b, b * c * ca],
                [a * c * cb, b * c * ca, c * c],
            ]
        )

    def to_gemmi(self):
        return gemmi.UnitCell(*self.parameters)


def _wrap(frac):
    wrapped = np.mod(np.asarray(frac, dtype=np.float64), 1.0)
    wrapped[wrapped >= 1.0] = 0.0
    return wrapped


@dataclass(frozen=True)
class AtomSite:
    """An atom at a fractional position with a site occupancy"""

    element: str
    frac_coords: Tuple[float, float, float]
    occupancy: float = 1.0

    def __post_init__(self):
        from pxrdsep.utils.elements import is_supported_element

        if not is_supported_element(self.element):
            raise UnsupportedElement(f"Unsupported element: {self.element!r}")
        if not 0.0 < self.occupancy <= 1.0:
            raise ValueError(f"Occupancy must lie in (0, 1]: {self.occupancy}")
        if len(self.frac_coords) != 3:
            raise ValueError(f"Expected 3 fractional coordinates: {self.frac_coords}")
        object.__setattr__(self, "frac_coords", tuple(_wrap(self.frac_coords).tolist()))
        object.__setattr__(self, "occupancy", float(self.occupancy))


def _format_component(row, shift):
    terms = []
    for coefficient, axis in zip(row, "xyz"):
        if coefficient == 1:
            terms.append(f"+{axis}")
        elif coefficient == -1:
            terms.append(f"-{axis}")
        elif coefficient != 0:
            terms.append(f"{coefficient:+d}*{axis}")
    if shift != 0:
        fraction = Fraction(shift).limit_denominator(24)
        terms.append(f"{'+' if fraction > 0 else '-'}{abs(fraction)}")
    text = "".join(terms) or "0"
    return text[1:] if text.startswith("+") else text


@dataclass(frozen=True)
class SymmetryOp:
    """
    Symmetry operator acting on fractional coordinates as ``R @ x + t``.
    """

    rotation: Tuple[Tuple[int, int, int], ...]
    translation: Tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        rot = np.asarray(self.rotation, dtype=np.int64)
        if rot.shape != (3, 3):
            raise ValueError(f"Rotation must be a 3x3 integer matrix: {self.rotation}")
        det = int(round(np.linalg.det(rot)))
        if det not in (1, -1):
            raise ValueError(f"Rotation determinant must be +1 or -1, not {det}")
        object.__setattr__(self, "rotation", tuple(map(tuple, rot.tolist())))
        object.__setattr__(
            self, "translation", tuple(float(t) for t in self.translation)
        )

    @classmethod
    def identity(cls):
        return cls(((1, 0, 0), (0, 1, 0), (0, 0, 1)))

    @classmethod
    def from_xyz(cls, triplet):
        """Construct operator from a coordinate triplet such as ``-y,x-y,z+1/3``"""
        op = gemmi.Op(triplet)
        rot = np.array(op.rot, dtype=np.int64)
        if np.any(rot % op.DEN):
            raise ValueError(f"Non-integer rotation in symmetry operator: {triplet!r}")
        tran = np.array(op.tran, dtype=np.float64) / op.DEN
        return cls(tuple(map(tuple, (rot // op.DEN).tolist())), tuple(tran.tolist()))

    @property
    def R(self):
        return np.array(self.rotation, dtype=np.int64)

    @property
    def t(self):
        return np.array(self.translation, dtype=np.float64)

    def apply(self, frac):
        """Apply operator to an n x 3 (or length-3) array of fractional coordinates"""
        frac = np.asarray(frac, dtype=np.float64)
        return frac @ self.R.T + self.t

    def triplet(self):
        return ",".join(
            _format_component(row, shift)
            for row, shift in zip(self.rotation, self.translation)
        )


def _fractional_delta(frac, others):
    delta = np.asarray(others, dtype=np.float64).reshape(-1, 3) - np.asarray(frac)
    return delta - np.round(delta)


def _coincident(frac, others, tol=SITE_TOLERANCE):
    if len(others) == 0:
        return np.zeros(0, dtype=bool)
    return np.all(np.abs(_fractional_delta(frac, others)) < tol, axis=-1)


def site_distances(frac, others, lattice):
    """Minimum-image distances in Å from ``frac`` to each of ``others``"""
    if len(others) == 0:
        return np.zeros(0)
    delta = _fractional_delta(frac, others)
    return np.sqrt(np.einsum("ni,ij,nj->n", delta, lattice.metric_tensor, delta))


def _same_species(first, second):
    return first.element == second.element and np.isclose(
        first.occupancy, second.occupancy, rtol=0.0, atol=1e-9
    )


def _disorder(first, second, position, reason="share the position"):
    return DisorderedStructure(
        f"Sites {first.element} (occupancy {first.occupancy}) and "
        f"{second.element} (occupancy {second.occupancy}) {reason} "
        f"{np.round(position, 5).tolist()}"
    )


def _unique_sources(sites, lattice, tol, min_distance):
    """
    Drop repeated listings of a fully occupied site.

    Any other pair of listed sites that coincide, or lie closer than
    ``min_distance``, is disorder.
    """
    kept = []
    for site in sites:
        positions = [other.frac_coords for other in kept]
        hits = np.flatnonzero(_coincident(site.frac_coords, positions, tol))
        if len(hits) > 0:
            other = kept[hits[0]]
            if _same_species(other, site) and site.occupancy == 1.0:
                continue
            raise _disorder(other, site, site.frac_coords)
        if lattice is not None:
            distances = site_distances(site.frac_coords, positions, lattice)
            near = np.flatnonzero(distances < min_distance)
            if len(near) > 0:
                raise _disorder(
                    kept[near[0]],
                    site,
                    site.frac_coords,
                    f"lie {distances[near[0]]:.3f} Å apart near",
                )
        kept.append(site)
    return kept


def expand_sites(
    sites,
    symmetry_ops,
    lattice=None,
    tol=SITE_TOLERANCE,
    min_distance=MIN_SITE_DISTANCE,
):
    """
    Generate all symmetry images of the given sites and remove duplicates.

    Images that coincide with an accepted site of the same element and
    occupancy are merged, so expanding an expanded site list changes
    nothing. Listed sites that share a position are merged only when they
    repeat a fully occupied site; any partially occupied or mixed-species
    coincidence is disorder. With a ``lattice``, distinct sites closer
    than ``min_distance`` are rejected instead of merged.

    Parameters
    ----------
    sites : sequence of AtomSite
        Asymmetric-unit (or already expanded) sites
    symmetry_ops : sequence of SymmetryOp
        Operators to apply. The identity is always included.
    lattice : Lattice, optional
        Cell used for the Cartesian distance check. Skipped if None.
    tol : float
        Fractional tolerance for coincidence
    min_distance : float
        Smallest allowed separation of distinct sites in Å

    Returns
    -------
    tuple of AtomSite

    Raises
    ------
    DisorderedStructure
        If distinct species or partial occupancies share a position, or
        distinct sites lie closer than ``min_distance``
    """
    ops = list(symmetry_ops) or [SymmetryOp.identity()]
    accepted = []
    positions = []
    for site in _unique_sources(sites, lattice, tol, min_distance):
        images = [_wrap(op.apply(site.frac_coords)) for op in ops]
        images.insert(0, np.asarray(site.frac_coords))
        for image in images:
            hits = np.flatnonzero(_coincident(image, positions, tol))
            if len(hits) > 0:
                if not _same_species(accepted[hits[0]], site):
                    raise _disorder(accepted[hits[0]], site, image)
                continue
            if lattice is not None:
                distances = site_distances(image, positions, lattice)
                near = np.flatnonzero(distances < min_distance)
                if len(near) > 0:
                    raise _disorder(
                        accepted[near[0]],
                        site,
                        image,
                        f"lie {distances[near[0]]:.3f} Å apart near",
                    )
            accepted.append(AtomSite(site.element, tuple(image), site.occupancy))
            positions.append(accepted[-1].frac_coords)
    return tuple(accepted)


@dataclass(frozen=True)
class CrystalStructure:
    """
    Ordered crystal structure with a fully expanded list of sites.

    Attributes
    ----------
    id : str
        Stable identifier, usually the CIF data block name
    lattice : Lattice
    sites : tuple of AtomSite
        All atoms in the unit cell
    symmetry_ops : tuple of SymmetryOp
        Operators used to generate ``sites``; their rotation parts define
        the point group used for reflection multiplicities
    space_group_number : int or None
    """

    id: str
    lattice: Lattice
    sites: Tuple[AtomSite, ...]
    symmetry_ops: Tuple[SymmetryOp, ...] = field(
        default_factory=lambda: (SymmetryOp.identity(),)
    )
    space_group_number: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "sites", tuple(self.sites))
        object.__setattr__(self, "symmetry_ops", tuple(self.symmetry_ops))
        if len(self.sites) == 0:
            raise MissingSites(f"Structure {self.id!r} has no atom sites")
        frac = self.frac_coords
        for i in range(len(frac) - 1):
            if np.any(_coincident(frac[i], frac[i + 1 :])):
                raise DisorderedStructure(
                    f"Structure {self.id!r} has coincident sites at "
                    f"{np.round(frac[i], 5).tolist()}"
                )
            distances = site_distances(frac[i], frac[i + 1 :], self.lattice)
            if np.any(distances < MIN_SITE_DISTANCE):
                raise DisorderedStructure(
                    f"Structure {self.id!r} has sites {distances.min():.3f} Å "
                    f"apart near {np.round(frac[i], 5).tolist()}"
                )
        if self.space_group_number is not None and not (
            1 <= int(self.space_group_number) <= 230
        ):
            raise ValueError(
                f"Space group number must lie in [1, 230]: {self.space_group_number}"
            )

    @property
    def frac_coords(self):
        return np.array([site.frac_coords for site in self.sites], dtype=np.float64)

    @property
    def occupancies(self):
        return np.array([site.occupancy for site in self.sites], dtype=np.float64)

    @property
    def elements(self):
        return [site.element for site in self.sites]

    @property
    def point_group(self):
        """Unique rotation parts of the symmetry operators"""
        rotations = {op.rotation for op in self.symmetry_ops}
        rotations.add(SymmetryOp.identity().rotation)
        return np.array(sorted(rotations), dtype=np.int64)

    def expanded(self):
        """Re-apply the symmetry operators to the site list"""
        return CrystalStructure(
            self.id,
            self.lattice,
            expand_sites(self.sites, self.symmetry_ops, self.lattice),
            self.symmetry_ops,
            self.space_group_number,
        )


@dataclass(frozen=True)
class Reflection:
    """One symmetry-distinct family of lattice planes"""

    hkl: Tuple[int, int, int]
    d_spacing: float
    two_theta: float
    multiplicity: int

    @property
    def theta(self):
        return 0.5 * self.two_theta

    @property
    def q_mag(self):
        """Momentum transfer 2π/d in Å⁻¹"""
        return 2.0 * np.pi / self.d_spacing
