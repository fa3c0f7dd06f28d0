"""Uniform-grid domains inside an enclosing ball.

A bounded open set Omega (1D or 2D) is discretized by axis-aligned cells of
width h whose centers sit on a lattice anchored to the shape.  The grid
covers the ball whose diameter is t times the diameter of Omega and whose
center is the center of the smallest ball enclosing Omega; cells outside
Omega carry the zero constraint of the function spaces built on top.

Cell classification is by cell center: a cell belongs to the enclosing ball
iff its center lies within t*R/2 of the ball center, and to Omega iff its
center satisfies the shape predicate.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

__all__ = [
    "DomainSpec",
    "GridDomain",
    "build_domain",
    "dilate",
    "poincare_constant",
    "unit_ball_volume",
]

# slack applied to geometric comparisons so exact lattice ties classify
# deterministically instead of falling to rounding noise
_GEOM_RTOL = 1e-12


def unit_ball_volume(dim: int) -> float:
    """Lebesgue measure of the unit ball (2 in 1D, pi in 2D)."""
    if dim == 1:
        return 2.0
    if dim == 2:
        return math.pi
    raise ValueError(f"unsupported dimension {dim}")


# ---------------------------------------------------------------------------
# shapes


@dataclass(frozen=True)
class _Interval:
    a: float
    b: float

    def bbox(self):
        return np.array([self.a]), np.array([self.b])

    def contains(self, pts: NDArray) -> NDArray:
        x = pts[:, 0]
        return (x > self.a) & (x < self.b)


@dataclass(frozen=True)
class _Box:
    lo: NDArray
    hi: NDArray

    def bbox(self):
        return self.lo, self.hi

    def contains(self, pts: NDArray) -> NDArray:
        return np.all((pts > self.lo) & (pts < self.hi), axis=1)


@dataclass(frozen=True)
class _Ball:
    center: NDArray
    radius: float

    def bbox(self):
        return self.center - self.radius, self.center + self.radius

    def contains(self, pts: NDArray) -> NDArray:
        return np.sum((pts - self.center) ** 2, axis=1) < self.radius**2


@dataclass(frozen=True)
class _UnionShape:
    parts: tuple

    def bbox(self):
        los, his = zip(*(p.bbox() for p in self.parts))
        return np.min(np.stack(los), axis=0), np.max(np.stack(his), axis=0)

    def contains(self, pts: NDArray) -> NDArray:
        out = np.zeros(len(pts), dtype=bool)
        for p in self.parts:
            out |= p.contains(pts)
        return out


@dataclass(frozen=True)
class _MaskShape:
    origin: NDArray  # center of the first (row-major) cell
    counts: tuple
    cells: NDArray  # flat 0/1 array, row-major
    h: float

    def bbox(self):
        lo = self.origin - 0.5 * self.h
        hi = self.origin + (np.asarray(self.counts) - 0.5) * self.h
        return lo, hi

    def contains(self, pts: NDArray) -> NDArray:
        # integer index lookup keeps classification exact on the lattice
        idx = np.rint((pts - self.origin) / self.h).astype(np.int64)
        counts = np.asarray(self.counts)
        ok = np.all((idx >= 0) & (idx < counts), axis=1)
        out = np.zeros(len(pts), dtype=bool)
        if np.any(ok):
            flat = np.ravel_multi_index(idx[ok].T, tuple(self.counts))
            out[ok] = self.cells[flat].astype(bool)
        return out


def _parse_shape(d: dict, dim: int, h: float):
    kind = d.get("type")
    if kind == "interval":
        if dim != 1:
            raise ValueError("interval shapes require dim=1")
        a, b = float(d["a"]), float(d["b"])
        if not b > a:
            raise ValueError(f"empty interval ({a},{b})")
        return _Interval(a, b)
    if kind == "box":
        lo = np.asarray(d["min"], dtype=float)
        hi = np.asarray(d["max"], dtype=float)
        if lo.shape != (dim,) or hi.shape != (dim,):
            raise ValueError("box bounds must match the domain dimension")
        if not np.all(hi > lo):
            raise ValueError("box has empty extent")
        return _Box(lo, hi)
    if kind == "ball":
        c = np.asarray(d["center"], dtype=float)
        r = float(d["radius"])
        if c.shape != (dim,):
            raise ValueError("ball center must match the domain dimension")
        if not r > 0:
            raise ValueError("ball radius must be positive")
        return _Ball(c, r)
    if kind == "union":
        parts = tuple(_parse_shape(p, dim, h) for p in d["parts"])
        if not parts:
            raise ValueError("union of no parts")
        return _UnionShape(parts)
    if kind == "mask":
        origin = np.asarray(d["origin"], dtype=float)
        counts = tuple(int(c) for c in d["counts"])
        cells = np.asarray(d["cells"], dtype=np.int8)
        if origin.shape != (dim,) or len(counts) != dim:
            raise ValueError("mask origin/counts must match the domain dimension")
        if cells.size != int(np.prod(counts)):
            raise ValueError("mask cell array does not match counts")
        return _MaskShape(origin, counts, cells, h)
    raise ValueError(f"unknown shape type {kind!r}")


@dataclass(frozen=True)
class DomainSpec:
    """Description of the open set: dimension, cell width and shape dict."""

    dim: int
    h: float
    shape: dict

    def __post_init__(self) -> None:
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if not self.h > 0:
            raise ValueError("h must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "DomainSpec":
        return cls(dim=int(d["dim"]), h=float(d["h"]), shape=dict(d["shape"]))


# ---------------------------------------------------------------------------
# smallest enclosing ball of the flagged cell centers


def _circle_through(p1, p2, p3):
    ax, ay = p1
    bx, by = p2
    cx, cy = p3
    d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    if d == 0.0:
        return None
    ux = ((ax**2 + ay**2) * (by - cy) + (bx**2 + by**2) * (cy - ay) + (cx**2 + cy**2) * (ay - by)) / d
    uy = ((ax**2 + ay**2) * (cx - bx) + (bx**2 + by**2) * (ax - cx) + (cx**2 + cy**2) * (bx - ax)) / d
    c = np.array([ux, uy])
    return c, float(np.linalg.norm(p1 - c))


def _enclosing_ball(points: NDArray) -> tuple[NDArray, float]:
    """Exact smallest enclosing ball of a finite point set (dim 1 or 2)."""
    dim = points.shape[1]
    if dim == 1:
        lo, hi = points[:, 0].min(), points[:, 0].max()
        return np.array([0.5 * (lo + hi)]), 0.5 * (hi - lo)

    # reduce to convex hull vertices, then scan support pairs and triples
    if len(points) > 3:
        from scipy.spatial import ConvexHull, QhullError

        try:
            hull = points[ConvexHull(points).vertices]
        except QhullError:  # collinear point sets
            hull = points
    else:
        hull = points
    hull = np.unique(hull, axis=0)

    best_c, best_r = None, math.inf
    slack = 1.0 + 1e-12
    for i, j in itertools.combinations(range(len(hull)), 2):
        c = 0.5 * (hull[i] + hull[j])
        r = float(np.linalg.norm(hull[i] - c))
        if r < best_r and np.all(np.linalg.norm(hull - c, axis=1) <= r * slack):
            best_c, best_r = c, r
    if best_c is not None:
        return best_c, best_r
    for i, j, k in itertools.combinations(range(len(hull)), 3):
        res = _circle_through(hull[i], hull[j], hull[k])
        if res is None:
            continue
        c, r = res
        if r < best_r and np.all(np.linalg.norm(hull - c, axis=1) <= r * slack):
            best_c, best_r = c, r
    if best_c is None:  # all hull points identical
        return hull[0].copy(), 0.0
    return best_c, best_r


def _set_diameter(points: NDArray) -> float:
    """Max pairwise distance between the given points."""
    if len(points) == 1:
        return 0.0
    if points.shape[1] == 1:
        return float(points[:, 0].max() - points[:, 0].min())
    if len(points) > 3:
        from scipy.spatial import ConvexHull, QhullError

        try:
            points = points[ConvexHull(points).vertices]
        except QhullError:
            pass
    d2 = np.sum((points[:, None, :] - points[None, :, :]) ** 2, axis=-1)
    return float(np.sqrt(d2.max()))


# ---------------------------------------------------------------------------
# the grid domain


@dataclass(frozen=True, eq=False)
class GridDomain:
    """Cells of the enclosing ball with an Omega membership flag per cell.

    Attributes
    ----------
    dim : int
        Spatial dimension, 1 or 2.
    h : float
        Cell width.
    cells : (M, dim) float array
        Centers of all cells of the ball, in row-major order of the
        bounding lattice.
    omega_mask : (M,) bool array
        True where the cell center lies in Omega.
    center : (dim,) float array
        Center of the smallest ball enclosing Omega.
    diameter_R : float
        Diameter of Omega (max pairwise distance of flagged centers plus
        one cell width, which reproduces the exact diameter for
        lattice-aligned shapes).
    t : float
        Truncation factor; the ball has diameter t * diameter_R.
    origin : (dim,) float array
        Center of the first cell of the bounding lattice.
    counts : tuple of int
        Bounding-lattice extent per dimension.
    lattice_index : (M,) int array
        Row-major flat index of each cell within the bounding lattice.
    """

    dim: int
    h: float
    cells: NDArray
    omega_mask: NDArray
    center: NDArray
    diameter_R: float
    t: float
    origin: NDArray
    counts: tuple
    lattice_index: NDArray

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_omega(self) -> int:
        return int(self.omega_mask.sum())

    @cached_property
    def omega_indices(self) -> NDArray:
        return np.flatnonzero(self.omega_mask)

    @cached_property
    def other_indices(self) -> NDArray:
        return np.flatnonzero(~self.omega_mask)

    @cached_property
    def omega_cells(self) -> NDArray:
        return self.cells[self.omega_mask]

    @cached_property
    def dist_omega_omega(self) -> NDArray:
        """Pairwise distances between Omega cell centers (zero diagonal)."""
        x = self.omega_cells
        d2 = np.sum((x[:, None, :] - x[None, :, :]) ** 2, axis=-1)
        return np.sqrt(d2)

    @cached_property
    def dist_all_all(self) -> NDArray:
        """Full pairwise distance matrix; only materialized for pair ops."""
        x = self.cells
        d2 = np.sum((x[:, None, :] - x[None, :, :]) ** 2, axis=-1)
        return np.sqrt(d2)

    def dist_omega_to(self, idx: NDArray) -> NDArray:
        """Distances from Omega cells to the cells listed in idx."""
        x = self.omega_cells
        y = self.cells[idx]
        return np.sqrt(np.sum((x[:, None, :] - y[None, :, :]) ** 2, axis=-1))

    def embed_lattice(self, values: NDArray) -> NDArray:
        """Scatter per-cell values into the full bounding-lattice array."""
        full = np.zeros(int(np.prod(self.counts)))
        full[self.lattice_index] = values
        return full.reshape(self.counts)

    def validate(self) -> None:
        """Check the geometric invariants; raises ValueError on failure."""
        flagged = self.cells[self.omega_mask]
        if len(flagged) == 0:
            raise ValueError("no cell is flagged inside Omega")
        if self.omega_mask.all():
            raise ValueError("Omega fills the whole ball")
        r_half = 0.5 * self.diameter_R
        d_center = np.linalg.norm(flagged - self.center, axis=1)
        if d_center.max() > r_half + self.h * (1 + 1e-9):
            raise ValueError("a flagged cell escapes the enclosing ball of Omega")
        d_all = np.linalg.norm(self.cells - self.center, axis=1)
        if d_all.max() > 0.5 * self.t * self.diameter_R * (1 + 1e-9):
            raise ValueError("a cell escapes the truncation ball")
        brute = _set_diameter(flagged)
        if abs(self.diameter_R - brute) > self.h * (1 + 1e-9):
            raise ValueError("diameter_R drifts from the flagged-cell diameter")


def _lattice_axes(anchor: NDArray, h: float, k_lo: NDArray, k_hi: NDArray):
    return [anchor[d] + h * np.arange(k_lo[d], k_hi[d] + 1) for d in range(len(anchor))]


def _lattice_points(axes: Sequence[NDArray]) -> NDArray:
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def build_domain(spec: DomainSpec, t: float = 4.0) -> GridDomain:
    """Discretize the shape and the enclosing ball on a shared lattice.

    The lattice is anchored half a cell inside the shape's bounding box
    (mask shapes anchor at their stated origin), so lattice-aligned shapes
    tile exactly.  Identical specs produce identical cell orderings.
    """
    if not t > 1.0:
        raise ValueError(f"truncation factor t must exceed 1, got {t}")
    h = spec.h
    shape = _parse_shape(spec.shape, spec.dim, h)

    if isinstance(shape, _MaskShape):
        anchor = shape.origin.copy()
    else:
        lo, _ = shape.bbox()
        anchor = np.asarray(lo, dtype=float) + 0.5 * h

    # first pass: flag Omega on the lattice restricted to the shape bbox
    lo, hi = shape.bbox()
    k_lo = np.floor((lo - anchor) / h).astype(np.int64) - 1
    k_hi = np.ceil((hi - anchor) / h).astype(np.int64) + 1
    pts = _lattice_points(_lattice_axes(anchor, h, k_lo, k_hi))
    inside = shape.contains(pts)
    flagged = pts[inside]
    if len(flagged) == 0:
        raise ValueError("no cell center falls inside Omega; h is too coarse")
    if isinstance(shape, _UnionShape):
        for i, part in enumerate(shape.parts):
            if not np.any(part.contains(pts)):
                raise ValueError(f"union part {i} captures no cell; h is too coarse")

    center, enc_radius = _enclosing_ball(flagged)
    diameter = _set_diameter(flagged) + h
    if enc_radius > 0.5 * diameter + h * (1 + 1e-9):
        raise ValueError(
            "the smallest ball enclosing Omega is wider than diameter/2 + h; "
            "such shapes break the enclosing-ball invariants of this grid"
        )

    # second pass: enumerate the ball lattice around the center
    half = 0.5 * t * diameter
    k_lo = np.floor((center - half - anchor) / h).astype(np.int64) - 1
    k_hi = np.ceil((center + half - anchor) / h).astype(np.int64) + 1
    axes = _lattice_axes(anchor, h, k_lo, k_hi)
    counts = tuple(len(ax) for ax in axes)
    pts = _lattice_points(axes)
    in_ball = np.linalg.norm(pts - center, axis=1) <= half * (1 + _GEOM_RTOL)
    cells = pts[in_ball]
    lattice_index = np.flatnonzero(in_ball)
    omega = shape.contains(cells)
    if int(omega.sum()) != len(flagged):
        raise ValueError(
            "the truncation ball does not cover Omega at this resolution "
            "(t too small or h too coarse)"
        )

    origin = np.array([ax[0] for ax in axes])
    dom = GridDomain(
        dim=spec.dim,
        h=h,
        cells=cells,
        omega_mask=omega,
        center=center,
        diameter_R=diameter,
        t=t,
        origin=origin,
        counts=counts,
        lattice_index=lattice_index,
    )
    dom.validate()
    return dom


def dilate(dom: GridDomain, c: float) -> GridDomain:
    """Grid for the dilated set c*Omega: same cells and mask, geometry scaled."""
    if not c > 0:
        raise ValueError(f"dilation factor must be positive, got {c}")
    return GridDomain(
        dim=dom.dim,
        h=c * dom.h,
        cells=c * dom.cells,
        omega_mask=dom.omega_mask.copy(),
        center=c * dom.center,
        diameter_R=c * dom.diameter_R,
        t=dom.t,
        origin=c * dom.origin,
        counts=dom.counts,
        lattice_index=dom.lattice_index.copy(),
    )


def poincare_constant(dom: GridDomain, params) -> float:
    """Geometric constant bounding ||u||_p^p by the truncated energy.

    Minimum over candidate balls B inside the truncation ball and disjoint
    from Omega of diam(Omega union B)^(N+sp) / |B|.  Candidates are
    centered at non-Omega cell centers with radii in whole multiples of h.
    """
    n, sp = dom.dim, params.s * params.p
    h, R = dom.h, dom.diameter_R
    half = 0.5 * dom.t * R
    others = dom.other_indices
    if len(others) == 0:
        raise ValueError("Omega fills the ball; no candidate center exists")

    # chunk the candidate columns: the full Omega-by-exterior distance
    # matrix does not fit comfortably at the largest 2D grids
    dmin = np.empty(len(others))
    dmax = np.empty(len(others))
    cols = max(1, (1 << 22) // max(dom.n_omega, 1))
    for lo in range(0, len(others), cols):
        d = dom.dist_omega_to(others[lo : lo + cols])
        dmin[lo : lo + cols] = d.min(axis=0)
        dmax[lo : lo + cols] = d.max(axis=0)
    room = half - np.linalg.norm(dom.cells[others] - dom.center, axis=1)
    # largest admissible integer radius per center: stay out of Omega and
    # inside the truncation ball (ties admitted through a relative slack)
    kmax = np.floor(np.minimum(dmin, room) / h + 1e-9).astype(np.int64)
    if kmax.max() < 1:
        raise ValueError("no candidate ball fits between Omega and the ball boundary")

    vol = unit_ball_volume(n)
    best = math.inf
    for k in range(1, int(kmax.max()) + 1):
        ok = kmax >= k
        if not np.any(ok):
            break
        r = k * h
        diam = np.maximum(R, dmax[ok] + r)
        values = diam ** (n + sp) / (vol * r**n)
        best = min(best, float(values.min()))
    return best
