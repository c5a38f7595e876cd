import logging
import re

import gemmi
import numpy as np

from pxrdsep.errors import (
    MalformedLoop,
    MissingCell,
    MissingSites,
    MissingSymmetry,
    UnsupportedCifFeature,
)
from pxrdsep.structure import (
    AtomSite,
    CrystalStructure,
    Lattice,
    SymmetryOp,
    expand_sites,
)
from pxrdsep.utils.elements import is_supported_element

logger = logging.getLogger("ps.io.cif")

_CELL_TAGS = (
    "_cell_length_a",
    "_cell_length_b",
    "_cell_length_c",
    "_cell_angle_alpha",
    "_cell_angle_beta",
    "_cell_angle_gamma",
)
_SYMOP_TAGS = ("_space_group_symop_operation_xyz", "_symmetry_equiv_pos_as_xyz")
_SGNUM_TAGS = ("_space_group_IT_number", "_symmetry_Int_Tables_number")
_ANISO_TAGS = (
    "_atom_site_aniso_label",
    "_atom_site_aniso_U_11",
    "_atom_site_aniso_B_11",
)
_ELEMENT_RE = re.compile(r"^([A-Za-z]{1,2})")
_DUMP_CELL_KEYS = ("a", "b", "c", "alpha", "beta", "gamma")


def _number(block, tag):
    value = block.find_value(tag)
    if value is None:
        return None
    number = gemmi.cif.as_number(value)
    return None if np.isnan(number) else number


def _element_symbol(text):
    match = _ELEMENT_RE.match(text.strip())
    if match is None:
        raise MalformedLoop(f"Cannot infer element from atom site value: {text!r}")
    symbol = match.group(1)
    symbol = symbol[0].upper() + symbol[1:].lower()
    # Labels such as "Oa1" carry a letter that is not part of the symbol
    if len(symbol) == 2 and not is_supported_element(symbol):
        symbol = symbol[0]
    return symbol


def _read_block(text):
    try:
        doc = gemmi.cif.read_string(text)
    except (RuntimeError, ValueError) as err:
        raise MalformedLoop(f"CIF syntax error: {err}") from err
    if len(doc) == 0:
        raise MissingCell("CIF document contains no data block")
    if len(doc) > 1:
        raise UnsupportedCifFeature(
            f"CIF document contains {len(doc)} data blocks; only one is supported"
        )
    return doc.sole_block()


def _read_lattice(block):
    values = [_number(block, tag) for tag in _CELL_TAGS]
    missing = [tag for tag, value in zip(_CELL_TAGS, values) if value is None]
    if missing:
        raise MissingCell(f"CIF block {block.name!r} is missing {', '.join(missing)}")
    return Lattice(*values)


def _read_symmetry(block):
    ops = []
    for tag in _SYMOP_TAGS:
        column = block.find_values(tag)
        if column:
            for value in column:
                triplet = gemmi.cif.as_string(value)
                try:
                    ops.append(SymmetryOp.from_xyz(triplet))
                except (RuntimeError, ValueError) as err:
                    raise MalformedLoop(
                        f"Cannot parse symmetry operator: {triplet!r}"
                    ) from err
            break

    number = None
    for tag in _SGNUM_TAGS:
        value = _number(block, tag)
        if value is not None:
            number = int(value)
            break

    if not ops:
        if number not in (None, 1):
            raise MissingSymmetry(
                f"CIF block {block.name!r} gives space group {number} "
                "without explicit symmetry operators"
            )
        ops = [SymmetryOp.identity()]
    return ops, number


def _read_sites(block):
    for tag in _ANISO_TAGS:
        if block.find_values(tag):
            raise UnsupportedCifFeature(
                f"Anisotropic displacement parameters ({tag}) are not supported"
            )

    table = block.find(
        "_atom_site_",
        ["fract_x", "fract_y", "fract_z", "?type_symbol", "?label", "?occupancy"],
    )
    if not table or len(table) == 0:
        raise MissingSites(f"CIF block {block.name!r} has no atom site loop")
    if not (table.has_column(3) or table.has_column(4)):
        raise MalformedLoop("Atom site loop needs _atom_site_type_symbol or _label")

    sites = []
    for row in table:
        try:
            coords = [gemmi.cif.as_number(row[i], default=np.nan) for i in range(3)]
        except (RuntimeError, ValueError) as err:
            raise MalformedLoop(f"Bad fractional coordinate in row {row}") from err
        if np.any(np.isnan(coords)):
            raise MalformedLoop(f"Bad fractional coordinate in row {row}")
        source = row.str(3) if row.has(3) else row.str(4)
        occupancy = 1.0
        if row.has(5):
            occupancy = gemmi.cif.as_number(row[5], default=1.0)
            if np.isnan(occupancy):
                raise MalformedLoop(f"Bad occupancy in row {row}")
        sites.append(AtomSite(_element_symbol(source), tuple(coords), occupancy))
    return sites


def parse_structure(text):
    """
    Parse a CIF-subset document into a fully expanded CrystalStructure.

    The supported subset is a single data block with cell parameters,
    an optional symmetry-operator loop given as xyz triplets, and an
    atom-site loop with element symbols (or labels), fractional coordinates
    and optional occupancies.

    Parameters
    ----------
    text : str
        CIF document contents

    Returns
    -------
    CrystalStructure
        Structure whose id is the data block name

    Raises
    ------
    MissingCell
        If any cell parameter is absent
    MissingSites
        If there is no atom-site loop
    MissingSymmetry
        If a space group other than P1 is given without operators
    DisorderedStructure
        If partially occupied or distinct sites share a position, or
        sites lie closer than 0.1 Å
    UnsupportedElement
        If a site element lacks form-factor coefficients
    UnsupportedCifFeature
        For multiple data blocks or anisotropic displacement loops
    MalformedLoop
        For syntax errors or unparsable values
    """
    block = _read_block(text)
    lattice = _read_lattice(block)
    ops, number = _read_symmetry(block)
    sites = expand_sites(_read_sites(block), ops, lattice)
    logger.debug(
        f"Parsed {block.name}: {len(sites)} sites from {len(ops)} operators"
    )
    return CrystalStructure(block.name, lattice, sites, tuple(ops), number)


def read_structure(path):
    """
    Read a CIF-subset file into a CrystalStructure.

    Parameters
    ----------
    path : str or path object
        CIF file to read

    Returns
    -------
    CrystalStructure
    """
    with open(path, encoding="utf-8") as f:
        return parse_structure(f.read())


def write_cif(structure):
    """
    Serialize a structure to CIF-subset text that ``parse_structure`` reads
    back to an identical structure.

    Parameters
    ----------
    structure : CrystalStructure

    Returns
    -------
    str
    """
    doc = gemmi.cif.Document()
    block = doc.add_new_block(structure.id)
    for tag, value in zip(_CELL_TAGS, structure.lattice.parameters):
        block.set_pair(tag, repr(value))
    if structure.space_group_number is not None:
        block.set_pair(_SGNUM_TAGS[0], str(structure.space_group_number))

    loop = block.init_loop("_space_group_symop_", ["operation_xyz"])
    for op in structure.symmetry_ops:
        loop.add_row([gemmi.cif.quote(op.triplet())])

    loop = block.init_loop(
        "_atom_site_", ["type_symbol", "fract_x", "fract_y", "fract_z", "occupancy"]
    )
    for site in structure.sites:
        x, y, z = map(repr, site.frac_coords)
        loop.add_row([site.element, x, y, z, repr(site.occupancy)])
    return doc.as_string()


def dump_structure(structure):
    """
    Write a line-oriented dump of a structure.

    The dump holds ``key = value`` header lines (``id``, the six cell
    parameters and ``space_group_number``), one ``op = <triplet>`` line per
    symmetry operator, then one ``site = <element> <x> <y> <z> <occupancy>``
    line per expanded site. Floats are written with full precision.

    Parameters
    ----------
    structure : CrystalStructure

    Returns
    -------
    str
    """
    lines = [f"id = {structure.id}"]
    for name, value in zip(_DUMP_CELL_KEYS, structure.lattice.parameters):
        lines.append(f"{name} = {value!r}")
    number = structure.space_group_number
    lines.append(f"space_group_number = {'none' if number is None else number}")
    for op in structure.symmetry_ops:
        lines.append(f"op = {op.triplet()}")
    for site in structure.sites:
        x, y, z = site.frac_coords
        lines.append(f"site = {site.element} {x!r} {y!r} {z!r} {site.occupancy!r}")
    return "\n".join(lines) + "\n"


def read_dump(text):
    """
    Parse the output of :func:`dump_structure`.

    Returns
    -------
    CrystalStructure
    """
    header, ops, sites = {}, [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        key, sep, value = (part.strip() for part in line.partition("="))
        if not sep:
            raise MalformedLoop(
                f"Line {lineno} of structure dump lacks '=': {line!r}"
            )
        if key == "op":
            ops.append(SymmetryOp.from_xyz(value))
        elif key == "site":
            fields = value.split()
            if len(fields) != 5:
                raise MalformedLoop(f"Site line {lineno} needs 5 fields: {line!r}")
            sites.append(
                AtomSite(fields[0], tuple(map(float, fields[1:4])), float(fields[4]))
            )
        else:
            header[key] = value

    try:
        lattice = Lattice(*(float(header[k]) for k in _DUMP_CELL_KEYS))
    except KeyError as err:
        raise MissingCell(f"Structure dump is missing cell parameter {err}") from err
    number = header.get("space_group_number", "none")
    number = None if number == "none" else int(number)
    return CrystalStructure(
        header.get("id", "unnamed"),
        lattice,
        sites,
        tuple(ops) or (SymmetryOp.identity(),),
        number,
    )
