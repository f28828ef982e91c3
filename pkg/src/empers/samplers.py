"""Sampled metric measure spaces: parametric shapes, geodesic distances,
eccentricity weights, and image patches.

All randomness flows through the Philox counter-based generator seeded
explicitly, so identical specs produce identical samples across runs and
platforms. Child seeds for batch work are derived with
:func:`empers.config.derive_seed`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path
from scipy.spatial.distance import pdist, squareform

from .errors import DisconnectedGraphError
from .measure import Rectangle
from .persistence import DistanceMatrix, GrayImage

SHAPE_KINDS = ("sphere", "torus", "circle", "annulus")


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray  # (n, dim)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2:
            raise ValueError(f"points must be a 2-D array, got shape {pts.shape}")
        pts = pts.copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class ShapeSpec:
    """A parametric shape to sample uniformly with respect to its intrinsic
    (arc/surface/area) measure."""

    kind: str
    n: int
    seed: int
    radius: float = 1.0          # circle, sphere
    inner_radius: float = 1.0    # annulus
    outer_radius: float = 2.0    # annulus
    ring_radius: float = 2.0     # torus (center of tube to axis)
    tube_radius: float = 0.5     # torus

    def __post_init__(self):
        if self.kind not in SHAPE_KINDS:
            raise ValueError(f"unknown shape kind {self.kind!r}; expected one of {SHAPE_KINDS}")
        if self.n < 1:
            raise ValueError(f"sample count must be >= 1, got {self.n}")
        for name in ("radius", "inner_radius", "outer_radius", "ring_radius", "tube_radius"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.kind == "annulus" and not self.inner_radius < self.outer_radius:
            raise ValueError("annulus requires inner_radius < outer_radius")
        if self.kind == "torus" and not self.tube_radius < self.ring_radius:
            raise ValueError("torus requires tube_radius < ring_radius")


def sample_shape(spec: ShapeSpec) -> PointCloud:
    """Uniform sample of a circle, sphere, annulus, or torus.

    Circle: uniform angle. Sphere: normalized Gaussian directions. Annulus:
    uniform angle with the radius drawn by inverse CDF, r = sqrt(u*(R^2 -
    r0^2) + r0^2). Torus: uniform axial angle with the tube angle drawn by
    rejection against (R + r*cos(theta))/(R + r), which corrects the surface
    area element.
    """
    rng = _rng(spec.seed)
    n = spec.n
    if spec.kind == "circle":
        theta = rng.uniform(0.0, 2.0 * np.pi, n)
        pts = spec.radius * np.column_stack([np.cos(theta), np.sin(theta)])
    elif spec.kind == "sphere":
        g = rng.normal(size=(n, 3))
        pts = spec.radius * g / np.linalg.norm(g, axis=1, keepdims=True)
    elif spec.kind == "annulus":
        theta = rng.uniform(0.0, 2.0 * np.pi, n)
        u = rng.random(n)
        r0, r1 = spec.inner_radius, spec.outer_radius
        r = np.sqrt(u * (r1 ** 2 - r0 ** 2) + r0 ** 2)
        pts = np.column_stack([r * np.cos(theta), r * np.sin(theta)])
    else:  # torus
        big_r, small_r = spec.ring_radius, spec.tube_radius
        theta = np.empty(n)
        filled = 0
        while filled < n:
            cand = rng.uniform(0.0, 2.0 * np.pi, 2 * (n - filled))
            accept_p = (big_r + small_r * np.cos(cand)) / (big_r + small_r)
            keep = cand[rng.random(cand.size) < accept_p]
            take = min(keep.size, n - filled)
            theta[filled:filled + take] = keep[:take]
            filled += take
        phi = rng.uniform(0.0, 2.0 * np.pi, n)
        ring = big_r + small_r * np.cos(theta)
        pts = np.column_stack([ring * np.cos(phi), ring * np.sin(phi),
                               small_r * np.sin(theta)])
    return PointCloud(pts)


def pairwise_distances(pc: PointCloud) -> DistanceMatrix:
    """Euclidean distance matrix of a point cloud."""
    if pc.n == 1:
        return DistanceMatrix(np.zeros((1, 1)))
    return DistanceMatrix(squareform(pdist(pc.points)))


def knn_geodesic(dm: DistanceMatrix, k: int) -> DistanceMatrix:
    """All-pairs shortest-path distances on the k-nearest-neighbor graph.

    Edges are weighted by the input distances and symmetrized by union. A
    disconnected graph raises :class:`DisconnectedGraphError` with the
    component count so the caller can raise k.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    n = dm.n
    if k >= n:
        k = n - 1
    d = dm.entries
    order = np.argsort(d, axis=1, kind="stable")
    rows, cols, weights = [], [], []
    for i in range(n):
        neighbors = [j for j in order[i] if j != i][:k]
        for j in neighbors:
            rows.append(i)
            cols.append(j)
            weights.append(d[i, j])
    graph = csr_matrix((weights, (rows, cols)), shape=(n, n))
    graph = graph.maximum(graph.T)  # symmetrize by union of directed kNN edges
    n_comp, _ = connected_components(graph, directed=False)
    if n_comp > 1:
        raise DisconnectedGraphError(n_comp, k)
    geo = shortest_path(graph, method="D", directed=False)
    geo = np.minimum(geo, geo.T)  # exact symmetry for DistanceMatrix validation
    return DistanceMatrix(geo)


def eccentricity(dm: DistanceMatrix) -> np.ndarray:
    """Per-point max distance, normalized to a probability vector."""
    raw = dm.entries.max(axis=1)
    total = raw.sum()
    if total <= 0:
        raise ValueError("eccentricity is identically zero; cannot normalize")
    return raw / total


def inverse_transform_sample(weights: np.ndarray, m: int, seed: int) -> np.ndarray:
    """m i.i.d. indices with P(i) = weights[i], by CDF inversion."""
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0):
        raise ValueError("weights must be non-negative")
    if abs(w.sum() - 1.0) > 1e-9:
        raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
    cdf = np.cumsum(w)
    u = _rng(seed).random(m)
    idx = np.searchsorted(cdf, u, side="right")
    return np.minimum(idx, len(w) - 1)


TEXTURE_KINDS = ("gradient", "salt_pepper")


def synthetic_texture(kind: str, size: int, seed: int, max_value: float = 255.0) -> GrayImage:
    """Synthetic texture images for pipeline demos and tests.

    "gradient": a random linear ramp with mild Gaussian noise, so patches
    have very few sublevel-set minima. "salt_pepper": mid-gray with random
    extreme pixels, so patches have many short-lived components.
    """
    if kind not in TEXTURE_KINDS:
        raise ValueError(f"unknown texture kind {kind!r}; expected one of {TEXTURE_KINDS}")
    rng = _rng(seed)
    if kind == "gradient":
        angle = rng.uniform(0.0, 2.0 * np.pi)
        xs, ys = np.meshgrid(np.arange(size), np.arange(size))
        ramp = np.cos(angle) * xs + np.sin(angle) * ys
        ramp = (ramp - ramp.min()) / max(ramp.max() - ramp.min(), 1e-12)
        values = ramp * max_value + rng.normal(0.0, 2.0, (size, size))
    else:
        values = max_value / 2 + rng.normal(0.0, 8.0, (size, size))
        flips = rng.random((size, size))
        values[flips < 0.1] = 0.0
        values[flips > 0.9] = max_value
    return GrayImage(np.clip(values, 0.0, max_value))


def sample_patches(img: GrayImage, size: int, m: int, seed: int,
                   region: Optional[Rectangle] = None) -> list[GrayImage]:
    """m square crops with corners uniform over the valid positions.

    ``region`` is a half-open pixel box (x = column, y = row) clipped to the
    image; patches must fit inside it.
    """
    if size < 1:
        raise ValueError(f"patch size must be >= 1, got {size}")
    x_lo, y_lo = 0, 0
    x_hi, y_hi = img.width, img.height
    if region is not None:
        x_lo = max(x_lo, int(np.ceil(region.x_min)))
        y_lo = max(y_lo, int(np.ceil(region.y_min)))
        x_hi = min(x_hi, int(np.floor(region.x_max)))
        y_hi = min(y_hi, int(np.floor(region.y_max)))
    n_x = x_hi - x_lo - size + 1
    n_y = y_hi - y_lo - size + 1
    if n_x < 1 or n_y < 1:
        raise ValueError(f"patch of size {size} does not fit in region "
                         f"[{x_lo},{x_hi})x[{y_lo},{y_hi})")
    rng = _rng(seed)
    cols = x_lo + rng.integers(0, n_x, m)
    rows = y_lo + rng.integers(0, n_y, m)
    return [GrayImage(img.values[r:r + size, c:c + size]) for r, c in zip(rows, cols)]
