"""Persistent homology: Vietoris-Rips H0/H1 and sublevel-set H0 of images.

Vietoris-Rips diagrams are computed from a distance matrix by the standard
boundary-matrix column reduction over the two-element field. Simplices are
ordered by (filtration value, dimension, lexicographic vertex tuple), which
makes diagrams reproducible across runs; the output multiset is independent
of the input point order. Image diagrams use a union-find sweep with the
elder rule. Essential classes are finitized per ``essential_policy``: capped
at the enclosing radius (or the global max intensity for images), or
dropped.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .measure import PersistenceDiagram

CAP = "cap"
DROP = "drop"


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric non-negative matrix with zero diagonal."""

    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"distance matrix must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("distance matrix entries must be finite")
        if np.any(m < 0):
            raise ValueError("distance matrix entries must be >= 0")
        if not np.array_equal(m, m.T):
            raise ValueError("distance matrix must be exactly symmetric")
        if np.any(np.diag(m) != 0):
            raise ValueError("distance matrix must have a zero diagonal")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def n(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class GrayImage:
    """Grayscale image; ``values`` is a (height, width) float array."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.size == 0:
            raise ValueError(f"image must be a non-empty 2-D array, got shape {v.shape}")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class FiltrationOptions:
    """Options for persistence computations.

    ``max_dim`` is the top homology degree (0 or 1). ``max_radius`` truncates
    the Rips filtration; infinite means no truncation. ``connectivity`` (4 or
    8) applies to image filtrations only.
    """

    max_dim: int = 1
    max_radius: float = math.inf
    essential_policy: str = CAP
    connectivity: int = 4

    def __post_init__(self):
        if self.max_dim not in (0, 1):
            raise ValueError(f"max_dim must be 0 or 1, got {self.max_dim}")
        if self.essential_policy not in (CAP, DROP):
            raise ValueError(f"essential_policy must be '{CAP}' or '{DROP}'")
        if self.connectivity not in (4, 8):
            raise ValueError(f"connectivity must be 4 or 8, got {self.connectivity}")
        if self.max_radius <= 0:
            raise ValueError("max_radius must be positive")


def reduce_boundary_matrix(columns: Sequence[Iterable[int]]) -> tuple[list[set[int]], list[tuple[int, int]]]:
    """Left-to-right column reduction over the two-element field.

    ``columns[j]`` holds the row indices of the boundary of simplex j, all of
    which must be < j (simplices in filtration order). Returns the reduced
    columns and the pairing (low, j) for every column whose reduced form is
    non-empty; each low index appears at most once.
    """
    reduced: list[int] = []
    pivot: dict[int, int] = {}
    pairs: list[tuple[int, int]] = []
    for j, rows in enumerate(columns):
        col = 0
        for r in rows:
            if not (0 <= r < j):
                raise ValueError(f"column {j} references row {r}; boundaries must point backwards")
            col ^= 1 << r
        while col:
            low = col.bit_length() - 1
            other = pivot.get(low)
            if other is None:
                pivot[low] = j
                pairs.append((low, j))
                break
            col ^= reduced[other]
        reduced.append(col)
    as_sets = [{r for r in range(c.bit_length()) if c >> r & 1} for c in reduced]
    return as_sets, pairs


def _rips_simplices(dm: DistanceMatrix, opts: FiltrationOptions):
    """All simplices up to dimension max_dim + 1 within max_radius, in
    filtration order (value, dimension, lexicographic vertices)."""
    d = dm.entries
    n = dm.n
    simplices: list[tuple[float, int, tuple[int, ...]]] = [(0.0, 0, (i,)) for i in range(n)]
    r_max = opts.max_radius
    for i, j in combinations(range(n), 2):
        v = d[i, j]
        if v <= r_max:
            simplices.append((float(v), 1, (i, j)))
    if opts.max_dim >= 1:
        for i, j, k in combinations(range(n), 3):
            v = max(d[i, j], d[i, k], d[j, k])
            if v <= r_max:
                simplices.append((float(v), 2, (i, j, k)))
    simplices.sort()
    return simplices


def vr_persistence(dm: DistanceMatrix, opts: FiltrationOptions) -> dict[int, PersistenceDiagram]:
    """Vietoris-Rips persistence diagrams by degree from a distance matrix.

    The filtration value of a simplex is the largest pairwise distance of its
    vertices. Zero-persistence pairs are discarded. Essential classes get a
    death equal to the enclosing radius (the max matrix entry, or max_radius
    when finite) under the cap policy, and are omitted under drop.
    """
    simplices = _rips_simplices(dm, opts)
    index = {s[2]: i for i, s in enumerate(simplices)}
    columns = []
    for _, dim, verts in simplices:
        if dim == 0:
            columns.append(())
        else:
            columns.append(sorted(index[f] for f in combinations(verts, dim)))
    _, pairs = reduce_boundary_matrix(columns)

    points: dict[int, list[tuple[float, float]]] = {deg: [] for deg in range(opts.max_dim + 1)}
    paired_births = set()
    for low, j in pairs:
        paired_births.add(low)
        birth_val, birth_dim, _ = simplices[low]
        death_val = simplices[j][0]
        if birth_dim <= opts.max_dim and birth_val < death_val:
            points[birth_dim].append((birth_val, death_val))

    if opts.essential_policy == CAP:
        if math.isfinite(opts.max_radius):
            cap = float(opts.max_radius)
        else:
            cap = float(dm.entries.max()) if dm.n else 0.0
        destroyer_cols = {j for _, j in pairs}
        for i, (val, dim, _) in enumerate(simplices):
            if i in paired_births or i in destroyer_cols:
                continue
            if dim <= opts.max_dim and val < cap:
                points[dim].append((val, cap))

    return {deg: PersistenceDiagram(pts) for deg, pts in points.items()}


class _UnionFind:
    """Union-find tracking each component's birth value (elder rule)."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.birth = [0.0] * n

    def find(self, i: int) -> int:
        root = i
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[i] != root:
            self.parent[i], i = root, self.parent[i]
        return root

    def union(self, a: int, b: int) -> tuple[int, int]:
        """Merge the components of a and b; returns (surviving, dying) roots."""
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra, ra
        # the elder (smaller birth; tie broken by root index) survives
        if (self.birth[ra], ra) > (self.birth[rb], rb):
            ra, rb = rb, ra
        self.parent[rb] = ra
        return ra, rb


_NEIGHBOR_OFFSETS = {
    4: ((-1, 0), (1, 0), (0, -1), (0, 1)),
    8: ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)),
}


def image_sublevel_h0(img: GrayImage, opts: FiltrationOptions) -> PersistenceDiagram:
    """Degree-0 persistence of the sublevel-set filtration of pixel intensities.

    Pixels enter in increasing intensity (ties by row-major index); when a
    pixel joins two components the younger one dies at that pixel's intensity
    (elder rule). The surviving global component is capped at the maximum
    intensity or dropped, per policy. Zero-persistence points are discarded.
    """
    h, w = img.height, img.width
    vals = img.values.ravel()
    order = np.lexsort((np.arange(h * w), vals))
    uf = _UnionFind(h * w)
    seen = np.zeros(h * w, dtype=bool)
    offsets = _NEIGHBOR_OFFSETS[opts.connectivity]

    points: list[tuple[float, float]] = []
    for p in order:
        v = float(vals[p])
        r, c = divmod(int(p), w)
        roots = []
        for dr, dc in offsets:
            rr, cc = r + dr, c + dc
            if 0 <= rr < h and 0 <= cc < w:
                q = rr * w + cc
                if seen[q]:
                    roots.append(uf.find(q))
        seen[p] = True
        if not roots:
            uf.birth[p] = v
            continue
        # attach p to the eldest neighboring component, killing the others
        roots = sorted(set(roots), key=lambda root: (uf.birth[root], root))
        eldest = roots[0]
        uf.parent[p] = eldest
        for other in roots[1:]:
            surv, dead = uf.union(eldest, other)
            b = uf.birth[dead]
            if b < v:
                points.append((b, v))

    if opts.essential_policy == CAP:
        cap = float(vals.max())
        root = uf.find(int(order[0]))
        b = uf.birth[root]
        if b < cap:
            points.append((b, cap))
    return PersistenceDiagram(points)
