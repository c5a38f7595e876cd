"""
Small built-in crystal structures for the pipeline smoke run.
"""

import os

# name, (a, b, c, alpha, beta, gamma), [(element, x, y, z), ...]
TOY_STRUCTURES = [
    (
        "toy_rocksalt",
        (5.64, 5.64, 5.64, 90.0, 90.0, 90.0),
        [
            ("Na", 0.0, 0.0, 0.0),
            ("Na", 0.0, 0.5, 0.5),
            ("Na", 0.5, 0.0, 0.5),
            ("Na", 0.5, 0.5, 0.0),
            ("Cl", 0.5, 0.0, 0.0),
            ("Cl", 0.0, 0.5, 0.0),
            ("Cl", 0.0, 0.0, 0.5),
            ("Cl", 0.5, 0.5, 0.5),
        ],
    ),
    (
        "toy_cscl",
        (4.12, 4.12, 4.12, 90.0, 90.0, 90.0),
        [("Cs", 0.0, 0.0, 0.0), ("Cl", 0.5, 0.5, 0.5)],
    ),
    (
        "toy_fcc_cu",
        (3.615, 3.615, 3.615, 90.0, 90.0, 90.0),
        [
            ("Cu", 0.0, 0.0, 0.0),
            ("Cu", 0.0, 0.5, 0.5),
            ("Cu", 0.5, 0.0, 0.5),
            ("Cu", 0.5, 0.5, 0.0),
        ],
    ),
    (
        "toy_bcc_fe",
        (2.87, 2.87, 2.87, 90.0, 90.0, 90.0),
        [("Fe", 0.0, 0.0, 0.0), ("Fe", 0.5, 0.5, 0.5)],
    ),
    (
        "toy_rutile",
        (4.594, 4.594, 2.959, 90.0, 90.0, 90.0),
        [
            ("Ti", 0.0, 0.0, 0.0),
            ("Ti", 0.5, 0.5, 0.5),
            ("O", 0.305, 0.305, 0.0),
            ("O", 0.695, 0.695, 0.0),
            ("O", 0.805, 0.195, 0.5),
            ("O", 0.195, 0.805, 0.5),
        ],
    ),
    (
        "toy_hex_zn",
        (2.665, 2.665, 4.947, 90.0, 90.0, 120.0),
        [("Zn", 1 / 3, 2 / 3, 0.25), ("Zn", 2 / 3, 1 / 3, 0.75)],
    ),
]


def toy_cif(name, cell, sites):
    """CIF text of a P1 structure with explicit sites"""
    lines = [f"data_{name}"]
    tags = (
        "_cell_length_a",
        "_cell_length_b",
        "_cell_length_c",
        "_cell_angle_alpha",
        "_cell_angle_beta",
        "_cell_angle_gamma",
    )
    lines.extend(f"{tag} {value:.6f}" for tag, value in zip(tags, cell))
    lines.append("_space_group_IT_number 1")
    lines.append("loop_")
    lines.extend(
        [
            "_atom_site_label",
            "_atom_site_type_symbol",
            "_atom_site_fract_x",
            "_atom_site_fract_y",
            "_atom_site_fract_z",
        ]
    )
    for i, (element, x, y, z) in enumerate(sites):
        lines.append(f"{element}{i + 1} {element} {x:.6f} {y:.6f} {z:.6f}")
    return "\n".join(lines) + "\n"


def write_toy_cifs(directory):
    """Write every toy structure as ``<name>.cif`` and return the paths"""
    os.makedirs(directory, exist_ok=True)
    paths = []
    for name, cell, sites in TOY_STRUCTURES:
        path = os.path.join(directory, f"{name}.cif")
        with open(path, "w") as f:
            f.write(toy_cif(name, cell, sites))
        paths.append(path)
    return paths
