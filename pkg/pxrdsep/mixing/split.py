from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from pxrdsep.errors import DuplicateIds, MalformedLoop

SPLIT_NAMES = ("train", "val", "test")


@dataclass(frozen=True)
class SplitManifest:
    """
    Disjoint partition of crystal ids into named splits.

    Attributes
    ----------
    ratios : tuple of float
        Fraction of ids per split, in the order of ``splits``
    splits : dict
        Split name -> tuple of ids
    seed : int
        Seed of the shuffle that produced the partition
    """

    ratios: Tuple[float, ...]
    splits: Dict[str, Tuple[str, ...]]
    seed: int

    def __getitem__(self, name):
        return self.splits[name]

    @property
    def names(self):
        return tuple(self.splits)

    def split_of(self, crystal_id):
        for name, ids in self.splits.items():
            if crystal_id in ids:
                return name
        raise KeyError(crystal_id)

    def to_text(self):
        """
        Line-oriented manifest: ``# seed = ...`` and ``# ratios = ...`` header
        lines followed by one ``<split> <id>`` line per crystal.
        """
        lines = [
            f"# seed = {self.seed}",
            f"# ratios = {','.join(repr(r) for r in self.ratios)}",
            f"# splits = {','.join(self.names)}",
        ]
        for name, ids in self.splits.items():
            lines.extend(f"{name} {crystal_id}" for crystal_id in ids)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        header, rows = {}, []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                header[key.strip()] = value.strip()
                continue
            name, _, crystal_id = line.partition(" ")
            rows.append((name, crystal_id.strip()))
        try:
            seed = int(header["seed"])
            ratios = tuple(float(r) for r in header["ratios"].split(","))
            names = header["splits"].split(",")
        except KeyError as err:
            raise MalformedLoop(f"Split manifest is missing header {err}") from err
        splits = {name: [] for name in names}
        for name, crystal_id in rows:
            if name not in splits:
                raise MalformedLoop(f"Unknown split name in manifest: {name!r}")
            splits[name].append(crystal_id)
        return cls(ratios, {k: tuple(v) for k, v in splits.items()}, seed)


def split_by_crystal(ids, ratios=(0.8, 0.1, 0.1), seed=0, names=SPLIT_NAMES):
    """
    Partition crystal ids into disjoint splits.

    The ids are sorted, shuffled with a generator seeded by ``seed`` and cut
    into contiguous runs whose boundaries are the rounded cumulative ratios.
    When there are at least as many ids as splits, a split left empty by the
    rounding takes one id from the largest split.
    The result depends only on the set of ids, the ratios and the seed.

    Parameters
    ----------
    ids : iterable of str
        Unique crystal identifiers
    ratios : tuple of float
        Positive split fractions summing to 1
    seed : int
        Shuffle seed
    names : tuple of str
        Split names, one per ratio

    Returns
    -------
    SplitManifest

    Raises
    ------
    DuplicateIds
        If any id appears twice
    """
    ids = [str(i) for i in ids]
    if len(set(ids)) != len(ids):
        seen, dupes = set(), set()
        for i in ids:
            (dupes if i in seen else seen).add(i)
        raise DuplicateIds(f"Crystal ids are not unique: {sorted(dupes)}")
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != len(names):
        raise ValueError(f"Expected {len(names)} ratios, got {len(ratios)}")
    if min(ratios) <= 0.0 or abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"Split ratios must be positive and sum to 1: {ratios}")

    rng = np.random.default_rng(seed)
    ordered = sorted(ids)
    shuffled = [ordered[i] for i in rng.permutation(len(ordered))]

    bounds = np.round(np.cumsum(ratios) * len(ids)).astype(int)
    bounds[-1] = len(ids)
    counts = np.diff(bounds, prepend=0)
    if len(ids) >= len(names):
        for k in np.flatnonzero(counts == 0):
            donor = int(np.argmax(counts))
            counts[donor] -= 1
            counts[k] += 1
    bounds = np.cumsum(counts)
    starts = np.concatenate([[0], bounds[:-1]])
    splits = {
        name: tuple(shuffled[start:stop])
        for name, start, stop in zip(names, starts, bounds)
    }
    return SplitManifest(ratios, splits, int(seed))


def write_manifest(manifest, path):
    with open(path, "w") as f:
        f.write(manifest.to_text())


def read_manifest(path):
    with open(path) as f:
        return SplitManifest.from_text(f.read())
