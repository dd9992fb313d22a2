"""(0,q)-forms sampled on product grids and their d-bar derivatives.

A form stores one complex array per strictly increasing multi-index
``J`` (1-based).  Each array has one axis per factor; axis ``e - 1`` runs
over the interior nodes of factor ``e`` followed by its boundary samples.
Missing components are zero.  The wedge sign convention is

    dz_K = sign(e, K) * dz_e ^ dz_{K \\ e},   sign = (-1)^{#{k in K : k < e}},

where every ``dz`` denotes an anti-holomorphic differential.
"""

from __future__ import annotations

import csv
import io
from itertools import combinations
from typing import Callable, Dict, Iterable, Tuple

import numpy as np

from .domain import FactorGrid, ProductGrid
from .library import SymbolicForm

__all__ = [
    "Form0q",
    "wedge_sign",
    "split_e",
    "gamma_class",
    "dbar_axis",
    "dbar_numeric",
    "dbar_weighted",
    "monomial",
    "kernel_membership_q0",
    "form_to_csv",
]

MultiIndex = Tuple[int, ...]


def wedge_sign(e: int, K: MultiIndex) -> int:
    return -1 if sum(1 for k in K if k < e) % 2 else 1


class Form0q:
    """A (0,q)-form on a :class:`ProductGrid`.

    Parameters
    ----------
    grid : ProductGrid
    q : int
        Degree, ``0 <= q <= n``.
    coeffs : dict, optional
        Map from increasing 1-based multi-indices to arrays of shape
        ``grid.shape``.  Omitted components are zero.
    source : SymbolicForm, optional
        Symbolic origin, kept so the form can be resampled on finer grids.
    """

    def __init__(self, grid: ProductGrid, q: int, coeffs: Dict[MultiIndex, np.ndarray] | None = None,
                 source: SymbolicForm | None = None):
        if not 0 <= q <= grid.n:
            raise ValueError(f"degree q={q} out of range for n={grid.n}")
        self.grid, self.q, self.source = grid, int(q), source
        self.coeffs: Dict[MultiIndex, np.ndarray] = {}
        for J, a in (coeffs or {}).items():
            J = tuple(int(j) for j in J)
            if len(J) != q or list(J) != sorted(set(J)) or not all(1 <= j <= grid.n for j in J):
                raise ValueError(f"invalid multi-index {J} for a (0,{q})-form in n={grid.n}")
            a = np.asarray(a, dtype=complex)
            self.coeffs[J] = np.broadcast_to(a, grid.shape).copy() if a.shape != grid.shape else a

    # -- construction -----------------------------------------------------
    @property
    def n(self) -> int:
        return self.grid.n

    @classmethod
    def zeros(cls, grid: ProductGrid, q: int) -> "Form0q":
        return cls(grid, q, {})

    @classmethod
    def from_symbolic(cls, form: SymbolicForm, grid: ProductGrid) -> "Form0q":
        if form.n != grid.n:
            raise ValueError(f"form lives in n={form.n} but grid has n={grid.n}")
        zs = grid.coordinates()
        coeffs = {J: f(*zs) for J, f in form.functions().items()}
        return cls(grid, form.q, coeffs, source=form)

    @classmethod
    def from_callables(cls, grid: ProductGrid, q: int, funcs: Dict[MultiIndex, Callable]) -> "Form0q":
        zs = grid.coordinates()
        return cls(grid, q, {J: f(*zs) for J, f in funcs.items()})

    def indices(self) -> Iterable[MultiIndex]:
        return combinations(range(1, self.n + 1), self.q)

    def component(self, J: MultiIndex) -> np.ndarray:
        J = tuple(J)
        if J in self.coeffs:
            return self.coeffs[J]
        return np.zeros(self.grid.shape, complex)

    def copy(self) -> "Form0q":
        return Form0q(self.grid, self.q, {J: a.copy() for J, a in self.coeffs.items()}, self.source)

    # -- algebra ------------------------------------------------------------
    def _check(self, other: "Form0q"):
        if other.grid is not self.grid or other.q != self.q:
            raise ValueError("forms must share grid and degree")

    def __add__(self, other: "Form0q") -> "Form0q":
        self._check(other)
        out = {J: a.copy() for J, a in self.coeffs.items()}
        for J, b in other.coeffs.items():
            out[J] = out[J] + b if J in out else b.copy()
        return Form0q(self.grid, self.q, out)

    def __neg__(self) -> "Form0q":
        return Form0q(self.grid, self.q, {J: -a for J, a in self.coeffs.items()})

    def __sub__(self, other: "Form0q") -> "Form0q":
        return self + (-other)

    def __mul__(self, c) -> "Form0q":
        """Multiply every coefficient by a scalar or a broadcastable array."""
        return Form0q(self.grid, self.q, {J: a * c for J, a in self.coeffs.items()})

    __rmul__ = __mul__

    def wedge_dzbar(self, e: int, f) -> "Form0q":
        """``f dz_e ^ self`` for a scalar/array coefficient ``f``."""
        out: Dict[MultiIndex, np.ndarray] = {}
        for J, a in self.coeffs.items():
            if e in J:
                continue
            K = tuple(sorted(J + (e,)))
            out[K] = wedge_sign(e, K) * f * a
        return Form0q(self.grid, self.q + 1, out)

    # -- norms --------------------------------------------------------------
    def sup_norm(self, mask: np.ndarray | None = None) -> float:
        """Largest coefficient modulus over ``mask`` (default: all interior nodes)."""
        if mask is None:
            mask = self.grid.mask_from_factor_masks([np.ones(f.n_nodes, bool) for f in self.grid.factors])
        best = 0.0
        for a in self.coeffs.values():
            v = np.abs(a[mask])
            if v.size:
                best = max(best, float(np.nanmax(v)) if not np.all(np.isnan(v)) else 0.0)
        return best

    def is_zero(self, tol: float = 0.0, mask: np.ndarray | None = None) -> bool:
        return self.sup_norm(mask) <= tol

    def nonzero_indices(self, tol: float = 0.0, mask: np.ndarray | None = None):
        if mask is None:
            mask = self.grid.mask_from_factor_masks([np.ones(f.n_nodes, bool) for f in self.grid.factors])
        out = []
        for J, a in self.coeffs.items():
            v = np.abs(a[mask])
            if v.size and np.nanmax(v) > tol:
                out.append(J)
        return sorted(out)

    def __repr__(self):
        return f"Form0q(n={self.n}, q={self.q}, components={sorted(self.coeffs)})"


def split_e(omega: Form0q, e: int) -> Tuple[Form0q, Form0q]:
    """``(omega_e, omega')``: components containing ``dz_e`` and the rest."""
    if not 1 <= e <= omega.n:
        raise ValueError(f"axis e={e} out of range 1..{omega.n}")
    with_e = {J: a for J, a in omega.coeffs.items() if e in J}
    without = {J: a for J, a in omega.coeffs.items() if e not in J}
    return Form0q(omega.grid, omega.q, with_e), Form0q(omega.grid, omega.q, without)


def gamma_class(omega: Form0q, dbar_omega: Form0q | None, e: int, tol: float = 0.0) -> bool:
    """True iff no coefficient with an index beyond ``e`` exceeds ``tol``.

    With ``dbar_omega`` given the same test is applied to it as well.
    """
    for form in (omega, dbar_omega):
        if form is None:
            continue
        for J in form.nonzero_indices(tol):
            if max(J) > e:
                return False
    return True


# ---------------------------------------------------------------------------
# finite differences

def _stencil_weights(offsets) -> np.ndarray:
    """First-derivative weights at 0 for integer ``offsets`` (unit spacing)."""
    o = np.asarray(offsets, float)
    A = np.vander(o, len(o), increasing=True).T
    b = np.zeros(len(o))
    b[1] = 1.0
    return np.linalg.solve(A, b)


def _d_uniform(f: np.ndarray, h: float, axis: int, left_pad: np.ndarray | None = None,
               order: int = 4) -> np.ndarray:
    """Derivative of the given even ``order`` on a uniform 1-D grid along ``axis``.

    Central stencils are used wherever they fit; near the ends the stencil
    is shifted to a one-sided window of the same width.  ``left_pad``
    optionally supplies ``order // 2`` ghost values ahead of the first node
    (mirror points across the origin on polar grids).
    """
    m = order // 2
    f = np.moveaxis(f, axis, -1)
    N = f.shape[-1]
    if N < order + 1:
        raise ValueError(f"grid too coarse for the order-{order} stencil (need >= {order + 1} points)")
    if left_pad is not None:
        g = np.concatenate([np.moveaxis(left_pad, axis, -1), f], axis=-1)
        off = left_pad.shape[axis]
    else:
        g, off = f, 0
    M = g.shape[-1]
    d = np.empty_like(f)
    central = _stencil_weights(range(-m, m + 1))
    lo, hi = max(0, m - off), N - m
    acc = 0
    for w, s in zip(central, range(-m, m + 1)):
        acc = acc + w * g[..., lo + off + s: hi + off + s]
    d[..., lo:hi] = acc
    for i in list(range(0, lo)) + list(range(hi, N)):
        j = i + off
        start = min(max(j - m, 0), M - order - 1)
        offs = np.arange(start, start + order + 1) - j
        w = _stencil_weights(offs)
        d[..., i] = np.tensordot(g[..., start: start + order + 1], w, axes=([-1], [0]))
    d /= h
    return np.moveaxis(d, -1, axis)


FD_ORDER = 4


def _dbar_factor(F: np.ndarray, grid: FactorGrid, order: int | None = None) -> np.ndarray:
    """``d/d zbar`` along the last axis (factor samples); boundary samples become NaN."""
    lead = F.shape[:-1]
    nodes = F[..., : grid.n_nodes]
    n1, n2 = grid.shape
    A = nodes.reshape(lead + (n1, n2))
    if grid.kind == "polar":
        order = order or FD_ORDER
        if n1 < order + 1 or n2 < 4:
            raise ValueError(f"grid too coarse for d-bar stencils: {grid.shape}")
        h = grid.domain.radius / n1
        modes = np.rint(np.fft.fftfreq(n2) * n2)
        modes[np.abs(modes) == n2 // 2] = 0.0
        d_theta = np.fft.ifft(1j * modes * np.fft.fft(A, axis=-1), axis=-1)
        # ghost rows at -rho_1, -rho_0 are the rays rotated by pi
        half = n2 // 2
        m = order // 2
        ghost = np.roll(A[..., list(range(m - 1, -1, -1)), :], -half, axis=-1)
        d_r = _d_uniform(A, h, axis=-2, left_pad=ghost, order=order)
        r = grid.radii[:, None]
        e = np.exp(1j * grid.angles)[None, :]
        D = 0.5 * e * (d_r + 1j * d_theta / r)
    else:
        hx, hy = grid.domain.width / n1, grid.domain.height / n2
        order = order or FD_ORDER
        D = 0.5 * (_d_uniform(A, hx, axis=-2, order=order) + 1j * _d_uniform(A, hy, axis=-1, order=order))
    out = np.full(F.shape, np.nan + 0j)
    out[..., : grid.n_nodes] = D.reshape(lead + (grid.n_nodes,))
    return out


def dbar_axis(a: np.ndarray, grid: ProductGrid, e: int) -> np.ndarray:
    """``d a / d zbar_e`` for a coefficient array on the product grid."""
    X = np.moveaxis(a, e - 1, -1)
    return np.moveaxis(_dbar_factor(X, grid.factors[e - 1]), -1, e - 1)


def dbar_numeric(omega: Form0q) -> Form0q:
    """Finite-difference ``dbar omega`` (fourth-order radial/cartesian, spectral angular)."""
    if omega.q >= omega.n:
        return Form0q(omega.grid, omega.q + 1) if omega.q + 1 <= omega.n else _top_zero(omega)
    out: Dict[MultiIndex, np.ndarray] = {}
    for J, a in omega.coeffs.items():
        for j in range(1, omega.n + 1):
            if j in J:
                continue
            K = tuple(sorted(J + (j,)))
            term = wedge_sign(j, K) * dbar_axis(a, omega.grid, j)
            out[K] = out[K] + term if K in out else term
    return Form0q(omega.grid, omega.q + 1, out)


def _top_zero(omega: Form0q):
    raise ValueError("d-bar of a top-degree form is not a (0, n+1)-form")


def monomial(grid: ProductGrid, k) -> np.ndarray:
    """``z^k = prod_e z_e^{k_e}`` on the product grid samples."""
    k = np.broadcast_to(np.asarray(k, int), (grid.n,))
    out = np.ones((1,) * grid.n, complex)
    for e, ke in enumerate(k, start=1):
        if ke:
            out = out * grid.coordinate(e) ** int(ke)
    return out


def dbar_weighted(omega: Form0q, k) -> Form0q:
    """``dbar_k omega = z^k dbar(z^{-k} omega)`` evaluated by finite differences."""
    k = np.broadcast_to(np.asarray(k, int), (omega.n,))
    if not np.any(k):
        return dbar_numeric(omega)
    return dbar_numeric(omega * monomial(omega.grid, -k)) * monomial(omega.grid, k)


def kernel_membership_q0(f: Callable, D, p, s, *, resolution=64, tol: float = 1e-3,
                         closed_tol: float = 1e-4) -> bool:
    """Is the one-variable function ``f`` in the kernel of ``dbar_k`` on ``|z|^s L^p``?

    ``k = k(p, s)``.  The test has two parts: ``z^{-k} f`` must be
    reproduced by its boundary Cauchy integral on interior nodes (relative
    tolerance ``tol``), and the weighted norm of ``f`` must be finite and
    stable under refinement (see :func:`analysis.weighted_lp_norm_sweep`).

    Raises
    ------
    ValueError
        If ``dbar_k f`` is not small, i.e. ``f`` is not a valid input.
    """
    from .analysis import weighted_norm_converges
    from .cauchy import boundary_operator
    from .domain import build_grid
    from .weights import as_exponent, as_rational, dbar_weight

    p = as_exponent(p)
    s = as_rational(s)
    k = dbar_weight(p, s)
    grid = build_grid(D, resolution)
    omega = Form0q(grid, 0, {(): f(grid.coordinate(1))})
    scale = max(omega.sup_norm(), 1.0)
    fac = grid.factors[0]
    # the relative fourth-order error for z^{-k} f at m cells from the divisor
    # is about 120 / m^5 whatever the grid, so the closedness check skips the
    # first ten cells around z = 0 (when k != 0) as well as the rim
    away = fac.interior_mask(3.0)
    if k:
        away &= np.abs(fac.nodes) > 10.0 * fac.radial_step
    inner = grid.mask_from_factor_masks([away])
    resid = dbar_weighted(omega, [k]).sup_norm(inner)
    if resid > closed_tol * scale * max(1.0, 1.0 / fac.radial_step):
        raise ValueError(f"input is not dbar_k-closed (residual {resid:.3e})")
    vals = omega.component(())
    if not np.any(vals[: fac.n_nodes]):
        return True
    h = vals * fac.samples ** (-k)
    rh = boundary_operator(fac, 0)(h[None, :])[0, : fac.n_nodes]
    m = fac.interior_mask(3.0)
    err = np.max(np.abs(rh[m] - h[: fac.n_nodes][m]))
    if err > tol * np.max(np.abs(h[: fac.n_nodes][m])):
        return False
    return weighted_norm_converges(lambda z: f(z), D, p, s)


def form_to_csv(omega: Form0q, buf: io.TextIOBase | None = None, fmt: str = "%.12e") -> str:
    """Flat CSV ``node_index, J, re, im`` over interior nodes (row-major)."""
    out = buf or io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["node_index", "J", "re", "im"])
    sl = omega.grid.node_slices()
    for J in omega.indices():
        a = omega.component(J)[sl].ravel()
        label = "".join(str(j) for j in J) or "0"
        for i, v in enumerate(a):
            w.writerow([i, label, fmt % v.real, fmt % v.imag])
    return out.getvalue() if buf is None else ""
