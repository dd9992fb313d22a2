"""Planar domains, product domains and their sampling grids.

A factor grid samples one planar domain at cell centres and, in addition,
at ``m_b`` boundary nodes.  The boundary nodes are appended after the
interior nodes, so a field on a factor is a flat array of length
``n_nodes + n_boundary``.  Interior-only operators simply ignore the tail.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Tuple, Union

import numpy as np

__all__ = [
    "Disc",
    "Rectangle",
    "PlanarDomain",
    "ProductDomain",
    "BoundaryCurve",
    "FactorGrid",
    "ProductGrid",
    "boundary_nodes",
    "build_factor_grid",
    "build_grid",
    "domain_from_dict",
    "normalize_resolution",
]


@dataclass(frozen=True)
class Disc:
    center: complex = 0j
    radius: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("disc radius must be positive")
        object.__setattr__(self, "center", complex(self.center))
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def area(self) -> float:
        return np.pi * self.radius**2

    def contains(self, z) -> np.ndarray:
        return np.abs(np.asarray(z) - self.center) < self.radius

    def boundary_distance(self, z) -> np.ndarray:
        return self.radius - np.abs(np.asarray(z) - self.center)

    @property
    def is_origin_centered(self) -> bool:
        return self.center == 0


@dataclass(frozen=True)
class Rectangle:
    corner_lo: complex = 0j
    corner_hi: complex = 1 + 1j

    def __post_init__(self):
        lo, hi = complex(self.corner_lo), complex(self.corner_hi)
        if not (hi.real > lo.real and hi.imag > lo.imag):
            raise ValueError("rectangle needs positive width and height")
        object.__setattr__(self, "corner_lo", lo)
        object.__setattr__(self, "corner_hi", hi)

    @property
    def width(self) -> float:
        return self.corner_hi.real - self.corner_lo.real

    @property
    def height(self) -> float:
        return self.corner_hi.imag - self.corner_lo.imag

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def corners(self) -> Tuple[complex, complex, complex, complex]:
        lo, hi = self.corner_lo, self.corner_hi
        return (lo, complex(hi.real, lo.imag), hi, complex(lo.real, hi.imag))

    def contains(self, z) -> np.ndarray:
        z = np.asarray(z)
        return ((z.real > self.corner_lo.real) & (z.real < self.corner_hi.real)
                & (z.imag > self.corner_lo.imag) & (z.imag < self.corner_hi.imag))

    def boundary_distance(self, z) -> np.ndarray:
        z = np.asarray(z)
        return np.minimum.reduce([z.real - self.corner_lo.real, self.corner_hi.real - z.real,
                                  z.imag - self.corner_lo.imag, self.corner_hi.imag - z.imag])


PlanarDomain = Union[Disc, Rectangle]


def domain_from_dict(spec: dict) -> PlanarDomain:
    """Build a factor from a config table like ``{shape="disc", center=[0,0], radius=1}``."""
    shape = spec.get("shape")
    if shape == "disc":
        c = spec.get("center", [0.0, 0.0])
        return Disc(complex(c[0], c[1]), float(spec.get("radius", 1.0)))
    if shape == "rectangle":
        lo, hi = spec["corner_lo"], spec["corner_hi"]
        return Rectangle(complex(lo[0], lo[1]), complex(hi[0], hi[1]))
    raise ValueError(f"unknown shape {shape!r} (expected 'disc' or 'rectangle')")


@dataclass(frozen=True)
class ProductDomain:
    factors: Tuple[PlanarDomain, ...]

    def __post_init__(self):
        factors = tuple(self.factors)
        if not 1 <= len(factors) <= 3:
            raise ValueError("product domains are limited to 1 <= n <= 3 factors")
        object.__setattr__(self, "factors", factors)

    @property
    def n(self) -> int:
        return len(self.factors)


@dataclass(frozen=True, eq=False)
class BoundaryCurve:
    """Counterclockwise boundary nodes with tangents and trapezoid weights.

    ``weights`` are parameter weights, so ``sum(g * tangents * weights)``
    approximates the contour integral of ``g``.
    """

    nodes: np.ndarray
    tangents: np.ndarray
    weights: np.ndarray
    params: np.ndarray

    def __len__(self):
        return len(self.nodes)

    def contour_integral(self, values) -> complex:
        return np.sum(np.asarray(values) * self.tangents * self.weights, axis=-1)


def boundary_nodes(D: PlanarDomain, m_b: int, *, min_nodes: int = 16) -> BoundaryCurve:
    """Equispaced-in-parameter boundary nodes of ``D``.

    Circle nodes sit at angles ``2 pi j / m_b`` (trapezoidal rule).
    Rectangle nodes are split over the four edges in proportion to their
    lengths and placed at the midpoints of equal pieces of each edge, so
    the rule is the composite midpoint rule edge by edge.
    """
    if m_b < min_nodes:
        raise ValueError(f"need at least {min_nodes} boundary nodes, got {m_b}")
    if isinstance(D, Disc):
        t = np.arange(m_b) * (2 * np.pi / m_b)
        e = np.exp(1j * t)
        e.real[np.abs(e.real) < 1e-15] = 0.0
        e.imag[np.abs(e.imag) < 1e-15] = 0.0
        return BoundaryCurve(D.center + D.radius * e, 1j * D.radius * e,
                             np.full(m_b, 2 * np.pi / m_b), t)
    perim = 2 * (D.width + D.height)
    lengths = [D.width, D.height, D.width, D.height]
    counts = [max(1, int(round(m_b * L / perim))) for L in lengths]
    counts[-1] = max(1, m_b - sum(counts[:-1]))
    nodes, tang, wts, par = [], [], [], []
    start = 0.0
    for c, L, d, n in zip(D.corners, lengths, [1, 1j, -1, -1j], counts):
        s = (np.arange(n) + 0.5) * (L / n)
        nodes.append(c + d * s)
        tang.append(np.full(n, d, complex))
        wts.append(np.full(n, L / n))
        par.append(start + s)
        start += L
    return BoundaryCurve(np.concatenate(nodes), np.concatenate(tang),
                         np.concatenate(wts), np.concatenate(par))


def normalize_resolution(D: PlanarDomain, res) -> Tuple[int, int]:
    """Per-factor resolution as a pair.

    A scalar ``m`` on a disc means ``(m // 2, m)`` radial x angular cells;
    on a rectangle it means ``m x m`` cells.
    """
    if np.ndim(res) == 0:
        m = int(res)
        return (m // 2, m) if isinstance(D, Disc) else (m, m)
    a, b = (int(x) for x in res)
    return a, b


@dataclass(eq=False)
class FactorGrid:
    """Cell-centred grid on one planar factor, plus boundary samples."""

    domain: PlanarDomain
    shape: Tuple[int, int]
    nodes: np.ndarray
    areas: np.ndarray
    boundary: BoundaryCurve
    kind: str
    radii: np.ndarray | None = None
    angles: np.ndarray | None = None
    xs: np.ndarray | None = None
    ys: np.ndarray | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_nodes(self) -> int:
        return self.nodes.size

    @property
    def n_boundary(self) -> int:
        return len(self.boundary)

    @property
    def n_samples(self) -> int:
        return self.n_nodes + self.n_boundary

    @property
    def samples(self) -> np.ndarray:
        return np.concatenate([self.nodes, self.boundary.nodes])

    @property
    def spacing(self) -> float:
        """Worst-case cell diameter."""
        if self.kind == "polar":
            h = self.domain.radius / self.shape[0]
            return float(np.hypot(h, self.domain.radius * 2 * np.pi / self.shape[1]))
        return float(np.hypot(self.domain.width / self.shape[0],
                              self.domain.height / self.shape[1]))

    @property
    def radial_step(self) -> float:
        if self.kind == "polar":
            return self.domain.radius / self.shape[0]
        return max(self.domain.width / self.shape[0], self.domain.height / self.shape[1])

    def interior_mask(self, margin_cells: float = 2.0) -> np.ndarray:
        """Nodes farther than ``margin_cells`` grid steps from the boundary."""
        d = self.domain.boundary_distance(self.nodes)
        return d > margin_cells * self.radial_step

    def sample_mask(self, node_mask) -> np.ndarray:
        return np.concatenate([np.asarray(node_mask, bool), np.zeros(self.n_boundary, bool)])


def build_factor_grid(D: PlanarDomain, resolution, m_b: int | None = None) -> FactorGrid:
    n1, n2 = normalize_resolution(D, resolution)
    # on a disc the scalar resolution is the angular count; n_r = n_theta / 2
    if (n2 < 4 or n1 < 2) if isinstance(D, Disc) else (n1 < 4 or n2 < 4):
        raise ValueError(f"resolution too coarse: {(n1, n2)}")
    if isinstance(D, Disc):
        if n2 % 2:
            raise ValueError("angular resolution must be even")
        h = D.radius / n1
        edges = np.arange(n1 + 1) * h
        radii = (np.arange(n1) + 0.5) * h
        dth = 2 * np.pi / n2
        angles = (np.arange(n2) + 0.5) * dth
        nodes = D.center + radii[:, None] * np.exp(1j * angles)[None, :]
        ring = 0.5 * (edges[1:] ** 2 - edges[:-1] ** 2) * dth
        areas = np.repeat(ring[:, None], n2, axis=1)
        bc = boundary_nodes(D, m_b or n2, min_nodes=4)
        grid = FactorGrid(D, (n1, n2), nodes.ravel(), areas.ravel(), bc, "polar",
                          radii=radii, angles=angles)
    else:
        hx, hy = D.width / n1, D.height / n2
        xs = D.corner_lo.real + (np.arange(n1) + 0.5) * hx
        ys = D.corner_lo.imag + (np.arange(n2) + 0.5) * hy
        nodes = xs[:, None] + 1j * ys[None, :]
        areas = np.full((n1, n2), hx * hy)
        bc = boundary_nodes(D, m_b or 2 * (n1 + n2), min_nodes=4)
        grid = FactorGrid(D, (n1, n2), nodes.ravel(), areas.ravel(), bc, "cartesian",
                          xs=xs, ys=ys)
    if np.any(np.abs(grid.nodes) < 1e-14):
        raise ValueError("a grid node lies on the divisor {z = 0}; shift the domain or "
                         "change the resolution parity")
    return grid


@dataclass(eq=False)
class ProductGrid:
    """Tensor product of factor grids; arrays have one axis per factor."""

    factors: Tuple[FactorGrid, ...]

    @property
    def n(self) -> int:
        return len(self.factors)

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(f.n_samples for f in self.factors)

    @property
    def node_shape(self) -> Tuple[int, ...]:
        return tuple(f.n_nodes for f in self.factors)

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.node_shape))

    def coordinate(self, e: int) -> np.ndarray:
        """Broadcastable samples of coordinate ``z_e`` (``e`` is 1-based)."""
        shape = [1] * self.n
        shape[e - 1] = -1
        return self.factors[e - 1].samples.reshape(shape)

    def coordinates(self):
        return [self.coordinate(e) for e in range(1, self.n + 1)]

    def node_slices(self):
        return tuple(slice(0, f.n_nodes) for f in self.factors)

    def cell_areas(self) -> np.ndarray:
        w = np.ones(())
        for f in self.factors:
            w = np.multiply.outer(w, f.areas)
        return w

    def interior_mask(self, margin_cells: float = 2.0) -> np.ndarray:
        """Boolean array over samples: interior nodes on every axis."""
        m = np.ones((), bool)
        for f in self.factors:
            m = np.logical_and.outer(m, f.sample_mask(f.interior_mask(margin_cells)))
        return m

    def mask_from_factor_masks(self, masks: Sequence[np.ndarray]) -> np.ndarray:
        m = np.ones((), bool)
        for f, mk in zip(self.factors, masks):
            m = np.logical_and.outer(m, f.sample_mask(mk))
        return m


def build_grid(P, resolution, m_b: int | None = None) -> ProductGrid:
    """Tensor grid of per-factor grids.

    ``resolution`` is shared by all factors when it is a scalar or a tuple
    ``(n1, n2)``; a list supplies one entry per factor.
    """
    if isinstance(P, (Disc, Rectangle)):
        P = ProductDomain((P,))
    if isinstance(resolution, list):
        res = resolution
        if len(res) != P.n:
            raise ValueError(f"need {P.n} per-factor resolutions, got {len(res)}")
    else:
        res = [resolution] * P.n
    return ProductGrid(tuple(build_factor_grid(D, r, m_b) for D, r in zip(P.factors, res)))
