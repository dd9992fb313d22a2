r"""Weighted one-variable Cauchy transforms.

The area transform is

    I_k f(z) = z^k / (2 pi i) * \int_D f(w) w^{-k} (w - z)^{-1} dw ^ d\bar w,

with ``dw ^ d\bar w = -2i dA``, so ``I_0 1 = \bar z`` on the unit disc and
``d/d\bar z I_k f = f``.  The boundary transform replaces the area
integral by ``\oint_{bD} g(w) w^{-k} (w - z)^{-1} dw``.

On an origin-centred disc both transforms are evaluated mode by mode in
the angle: the angular integral of the Cauchy kernel against
``e^{i m phi}`` is known in closed form, which leaves one-dimensional
radial integrals.  Those are done by product integration: the radial
profile of each mode is interpolated piecewise linearly and integrated
exactly against the power-law kernel (innermost cell: power-law model
``rho^{|m|}``).  Rectangles use a dense cell sum with the kernel
singularity subtracted analytically.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.special import hyp2f1

from .domain import Disc, FactorGrid, PlanarDomain, Rectangle, boundary_nodes, build_factor_grid

__all__ = [
    "NonIntegrableError",
    "ScalarField",
    "BoundaryValue",
    "area_operator",
    "boundary_operator",
    "apply_along_axis",
    "weighted_cauchy_area",
    "weighted_cauchy_area_direct",
    "weighted_cauchy_boundary",
    "cauchy_pompeiu_residual",
    "disc_area_integral",
    "rect_area_integral",
    "kernel_integral_JR",
    "jr_envelope",
    "jr_bound_check",
    "area_transform_reference",
    "JRBoundCheck",
    "check_integrable",
]


class NonIntegrableError(ValueError):
    """Raised when ``f(w) / w^k`` is not absolutely integrable on the domain."""


@dataclass
class ScalarField:
    """Samples of a complex function on a factor grid.

    ``values`` holds interior nodes followed by boundary samples (the tail
    may be omitted).  ``func``, when given, is used for off-node lookups.
    """

    grid: FactorGrid
    values: np.ndarray
    func: Callable | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape[-1] not in (self.grid.n_nodes, self.grid.n_samples):
            raise ValueError(f"expected {self.grid.n_nodes} node values, got {v.shape[-1]}")
        if np.isnan(v[..., : self.grid.n_nodes]).any():
            raise ValueError("field contains NaN at grid nodes")
        self.values = v

    @classmethod
    def from_function(cls, f: Callable, grid: FactorGrid) -> "ScalarField":
        vals = np.broadcast_to(np.asarray(f(grid.samples), dtype=complex), grid.samples.shape)
        return cls(grid, vals.copy(), f)

    @property
    def node_values(self) -> np.ndarray:
        return self.values[..., : self.grid.n_nodes]

    def at(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if self.func is not None:
            return np.broadcast_to(np.asarray(self.func(z), complex), z.shape)
        idx = np.argmin(np.abs(self.grid.nodes[None, :] - z.reshape(-1, 1)), axis=1)
        return self.node_values[..., idx].reshape(self.values.shape[:-1] + z.shape)


# ---------------------------------------------------------------------------
# radial product integration

def _power_integral(E, t1, t2):
    """Integral of ``t**E`` over ``[t1, t2]`` (0 <= t1 <= t2), elementwise, stable."""
    E = np.asarray(E, float)
    t1, t2 = np.broadcast_arrays(np.asarray(t1, float), np.asarray(t2, float))
    E = np.broadcast_to(E, t1.shape)
    out = np.zeros(t1.shape)
    valid = t2 > t1
    a = E + 1.0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        lt1 = np.log(np.where(t1 > 0, t1, 1.0))
        lt2 = np.log(np.where(t2 > 0, t2, 1.0))
        log_case = valid & (a == 0)
        out = np.where(log_case & (t1 > 0), lt2 - lt1, out)
        out = np.where(log_case & (t1 == 0), np.inf, out)
        pos = valid & (a > 0)
        # t2**a * (1 - (t1/t2)**a) / a
        ratio_term = np.where(t1 > 0, -np.expm1(a * (lt1 - lt2)), 1.0)
        out = np.where(pos, np.exp(a * lt2) * ratio_term / np.where(pos, a, 1.0), out)
        neg = valid & (a < 0)
        out = np.where(neg & (t1 == 0), np.inf, out)
        neg = neg & (t1 > 0)
        out = np.where(neg, np.exp(a * lt1) * np.expm1(a * (lt2 - lt1)) / np.where(neg, a, 1.0), out)
    return out


def _scaled_power_integral(E, logc, t1, t2):
    """Integral of ``c * t**E`` over ``[t1, t2]`` with ``c = exp(logc)``, in log space."""
    E = np.asarray(E, float)
    a = E + 1.0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        lt1 = np.log(np.where(t1 > 0, t1, 1.0))
        lt2 = np.log(t2)
        hi = np.exp(logc + a * lt2)
        lo = np.where(t1 > 0, np.exp(logc + a * lt1), np.where(a > 0, 0.0, np.inf))
        safe_a = np.where(a == 0, 1.0, a)
        val = np.where(a == 0, np.exp(logc) * (lt2 - lt1), (hi - lo) / safe_a)
    return np.where(t2 > t1, val, 0.0)


def radial_weights(radii: np.ndarray, R: float, targets: np.ndarray, modes: np.ndarray, k: int):
    """Product-integration weights for the per-mode radial integrals.

    Returns ``W`` with shape ``(len(targets), len(modes), len(radii))`` so
    that the angular coefficient of ``e^{i (m - k - 1) theta}`` in
    ``z^{-k} I_k f`` at radius ``r_t`` equals ``sum_i W[t, m, i] f_m(rho_i)``,
    where ``f_m`` is the ``m``-th angular Fourier coefficient of ``f``.
    """
    radii = np.asarray(radii, float)
    N = radii.size
    if N < 2:
        raise ValueError("need at least two radial nodes")
    h = radii[1] - radii[0]
    r = np.maximum(np.asarray(targets, float), 1e-14 * R)[:, None, None]
    m = np.asarray(modes, int)[None, :, None]
    n = m - k
    upper = n >= 1
    e = np.where(upper, -(n - 1) - k, 1 - n - k).astype(float)
    sign = np.where(upper, -2.0, 2.0)
    lo = np.where(upper, r, 0.0)
    hi = np.where(upper, R, r)

    # regular intervals [rho_{i}, rho_{i+1}] and the outer piece [rho_{N-1}, R]
    A = np.concatenate([radii[:-1], radii[-1:]])[None, None, :]
    B = np.concatenate([radii[1:], [R]])[None, None, :]
    a = np.maximum(A, lo)
    b = np.minimum(B, hi)
    ok = b > a
    a = np.where(ok, a, A)
    b = np.where(ok, b, A)
    mu0 = r ** (1 - k) * _power_integral(e, a / r, b / r)
    mu1 = r ** (2 - k) * _power_integral(e + 1, a / r, b / r)
    mu0 = np.where(ok, mu0, 0.0)
    mu1 = np.where(ok, mu1, 0.0)

    W = np.zeros((r.shape[0], m.shape[1], N))
    left = (B * mu0 - mu1) / h     # weight of the left node of a regular interval
    right = (mu1 - A * mu0) / h
    W[:, :, : N - 1] += left[:, :, : N - 1]
    W[:, :, 1:N] += right[:, :, : N - 1]
    # outer piece: linear extrapolation from the last two nodes
    slope = (mu1[:, :, -1] - radii[-1] * mu0[:, :, -1]) / h
    W[:, :, N - 1] += mu0[:, :, -1] + slope
    W[:, :, N - 2] -= slope

    # innermost piece [0, rho_0]: f_m(rho) ~ f_m(rho_0) (rho / rho_0)^|m|
    rho0 = radii[0]
    a0 = np.maximum(0.0, lo)[..., 0]
    b0 = np.minimum(rho0, hi)[..., 0]
    r0 = r[..., 0]
    absm = np.abs(m[..., 0])
    E0 = e[..., 0] + absm
    # integral of r^{1-k} (r/rho_0)^{|m|} t^{e+|m|} dt in t = rho / r
    logc = (1 - k) * np.log(r0) + absm * (np.log(r0) - np.log(rho0))
    inner = _scaled_power_integral(E0, logc, a0 / r0, b0 / r0)
    inner = np.where(b0 > a0, inner, 0.0)
    W[:, :, 0] += inner
    W *= sign
    return W


def _fft_modes(n_theta: int) -> np.ndarray:
    return np.rint(np.fft.fftfreq(n_theta) * n_theta).astype(int)


def check_integrable(values: np.ndarray, grid: FactorGrid, k: int, *, slack: float = 0.05):
    """Raise :class:`NonIntegrableError` if ``|f| / |w|^k`` is not integrable at 0.

    On an origin-centred polar grid the ring means of ``|f| rho^{-k}`` on
    the two innermost rings give a local power ``beta``; the area integral
    converges iff ``beta > -2``.  Other grids are checked by comparing the
    innermost-cell contribution against the total.
    """
    if k <= 0:
        return
    v = np.nan_to_num(np.abs(np.asarray(values)[..., : grid.n_nodes]))
    if grid.kind == "polar" and grid.domain.is_origin_centered:
        nr, nt = grid.shape
        g = v.reshape(v.shape[:-1] + (nr, nt)).mean(axis=-1) * grid.radii ** (-k)
        g = g.reshape(-1, nr).max(axis=0)
        if g[0] == 0:
            return
        if g[1] == 0:
            beta = np.inf
        else:
            beta = np.log(g[1] / g[0]) / np.log(grid.radii[1] / grid.radii[0])
        if beta <= -2 + slack:
            raise NonIntegrableError(
                f"f(w)/w^{k} is not integrable at w = 0 (local radial power {beta:.3f} <= -2)")
        return
    if not grid.domain.contains(np.array([0j]))[0]:
        return
    w = v.reshape(-1, grid.n_nodes).max(axis=0) * np.abs(grid.nodes) ** (-k) * grid.areas
    if w.sum() > 0 and w.max() > 0.5 * w.sum():
        raise NonIntegrableError(f"f(w)/w^{k} is dominated by the cell at the origin")


# ---------------------------------------------------------------------------
# batched application helpers

def apply_along_axis(op: Callable[[np.ndarray], np.ndarray], X: np.ndarray, axis: int,
                     n_jobs: int = 1, chunk: int = 256) -> np.ndarray:
    """Apply a fibre map ``(B, n_in) -> (B, n_out)`` along ``axis`` of ``X``.

    Fibres are split into fixed chunks; with ``n_jobs > 1`` chunks run on a
    thread pool.  Chunking does not depend on ``n_jobs``, so results are
    bitwise identical for any worker count.
    """
    Xm = np.moveaxis(np.asarray(X, complex), axis, -1)
    lead = Xm.shape[:-1]
    flat = Xm.reshape(-1, Xm.shape[-1])
    starts = list(range(0, flat.shape[0], chunk)) or [0]
    if n_jobs > 1 and len(starts) > 1:
        with ThreadPoolExecutor(n_jobs) as ex:
            parts = list(ex.map(lambda s: op(flat[s: s + chunk]), starts))
    else:
        parts = [op(flat[s: s + chunk]) for s in starts]
    out = np.concatenate(parts, axis=0) if parts else op(flat)
    return np.moveaxis(out.reshape(lead + (out.shape[-1],)), -1, axis)


class DiscAreaOperator:
    """Fibre operator ``I_k`` on a polar disc grid (targets: nodes and boundary samples)."""

    def __init__(self, grid: FactorGrid, k: int):
        if grid.kind != "polar":
            raise TypeError("DiscAreaOperator needs a polar grid")
        self.grid, self.k = grid, int(k)
        D = grid.domain
        nr, nt = grid.shape
        self.centered = D.is_origin_centered
        self.kernel_k = self.k if self.centered else 0
        self.modes = _fft_modes(nt)
        self._Wt = None
        self.phase = np.exp(-1j * (self.kernel_k + 1) * grid.angles)
        bc = grid.boundary
        psi = np.angle(bc.nodes - D.center)
        dth = 2 * np.pi / nt
        self.ring_dft = (np.exp(1j * np.outer(psi, self.modes - self.kernel_k - 1))
                         * np.exp(-0.5j * self.modes * dth)[None, :] / nt)
        zs = grid.samples
        self.zk = zs ** self.k
        self.wk = None if self.centered or self.k == 0 else grid.nodes ** (-self.k)

    @property
    def Wt(self) -> np.ndarray:
        """Radial weights at node rings and the boundary, shape ``(M, N, T)``; built on first use."""
        if self._Wt is None:
            g = self.grid
            targets = np.concatenate([g.radii, [g.domain.radius]])
            W = radial_weights(g.radii, g.domain.radius, targets, self.modes, self.kernel_k)
            self._Wt = np.ascontiguousarray(W.transpose(1, 2, 0)).astype(complex)
        return self._Wt

    def __call__(self, F: np.ndarray) -> np.ndarray:
        g = self.grid
        nr, nt = g.shape
        f = F[:, : g.n_nodes]
        if self.wk is not None:
            f = f * self.wk
        modes = np.fft.fft(f.reshape(-1, nr, nt), axis=-1)
        out = np.matmul(modes.transpose(2, 0, 1), self.Wt).transpose(1, 2, 0)  # (B, T, M)
        inner = np.fft.ifft(out[:, :nr, :], axis=-1) * self.phase
        ring = out[:, nr, :] @ self.ring_dft.T
        res = np.concatenate([inner.reshape(-1, g.n_nodes), ring], axis=1)
        radial = np.concatenate([np.repeat(g.radii, nt), np.full(g.n_boundary, g.domain.radius)])
        if self.centered:
            # z^k with the e^{i k phi} part already folded into the phase
            ang = np.concatenate([np.tile(g.angles, nr), np.angle(g.boundary.nodes)])
            return res * (radial ** self.k * np.exp(1j * self.k * ang))[None, :]
        return res * self.zk[None, :]

    def at_points(self, F: np.ndarray, z: np.ndarray) -> np.ndarray:
        """Evaluate at arbitrary points of the closed disc for one field ``F``."""
        g = self.grid
        D = g.domain
        nr, nt = g.shape
        z = np.asarray(z, complex).ravel()
        f = np.asarray(F)[: g.n_nodes]
        if self.wk is not None:
            f = f * self.wk
        u = z - D.center
        r = np.abs(u)
        th = np.angle(u)
        dth = 2 * np.pi / nt
        fm = np.fft.fft(f.reshape(nr, nt), axis=-1) * np.exp(-0.5j * self.modes * dth)[None, :] / nt
        W = radial_weights(g.radii, D.radius, r, self.modes, self.kernel_k)
        out = np.einsum("tmi,im->tm", W, fm)
        S = np.sum(out * np.exp(1j * np.outer(th, self.modes - self.kernel_k - 1)), axis=1)
        if self.centered:
            return S * r ** self.k * np.exp(1j * self.k * th)
        return S * z ** self.k


class DiscBoundaryOperator:
    """Fibre operator ``R_k``: Cauchy projection of boundary samples onto the nodes.

    The boundary values are expanded in angular Fourier modes; the Cauchy
    integral keeps the non-negative modes and continues them as powers of
    ``(z - c) / R``.  This is the trapezoidal rule with its geometric
    aliasing factor removed, so it stays accurate up to the boundary.
    Boundary targets are undefined and returned as NaN.
    """

    def __init__(self, grid: FactorGrid, k: int):
        self.grid, self.k = grid, int(k)
        D = grid.domain
        mb = grid.n_boundary
        self.M = mb // 2
        u = grid.nodes - D.center
        m = np.arange(self.M)
        self.basis = (u[:, None] / D.radius) ** m[None, :]
        self.bk = grid.boundary.nodes ** (-self.k)
        self.zk = grid.nodes ** self.k

    def __call__(self, F: np.ndarray) -> np.ndarray:
        g = self.grid
        G = F[:, g.n_nodes:] * self.bk[None, :]
        coef = np.fft.fft(G, axis=-1)[:, : self.M] / g.n_boundary
        res = (coef @ self.basis.T) * self.zk[None, :]
        return np.concatenate([res, np.full((F.shape[0], g.n_boundary), np.nan + 0j)], axis=1)


def _rect_kernel_integral(D: Rectangle, z: np.ndarray) -> np.ndarray:
    """Exact ``\\int_D dA / (w - z)`` via ``(1/2i) \\oint (\\bar w - \\bar z)/(w - z) dw``."""
    z = np.asarray(z, complex)
    total = np.zeros(z.shape, complex)
    c = D.corners
    for a, b in zip(c, c[1:] + c[:1]):
        d = b - a
        beta = np.conj(d) / d
        alpha = (np.conj(a) - np.conj(z)) - beta * (a - z)
        with np.errstate(divide="ignore", invalid="ignore"):
            lg = np.log((b - z) / (a - z))
        lg = np.where(np.abs(alpha) < 1e-14, 0.0, lg)
        total += alpha * lg + beta * d
    return total / 2j


def rect_area_integral(D: Rectangle, z) -> np.ndarray:
    return _rect_kernel_integral(D, z)


def disc_area_integral(D: Disc, z) -> np.ndarray:
    """``\\int_D dA / (w - z)`` for ``z`` in the closed disc."""
    return -np.pi * np.conj(np.asarray(z, complex) - D.center)


class DenseAreaOperator:
    """Cell-sum ``I_k`` with analytic subtraction of the kernel singularity."""

    def __init__(self, grid: FactorGrid, k: int, targets: np.ndarray | None = None):
        self.grid, self.k = grid, int(k)
        src = grid.nodes
        tz = grid.samples if targets is None else np.asarray(targets, complex).ravel()
        self.targets = tz
        D = grid.domain
        KD = (_rect_kernel_integral(D, tz) if isinstance(D, Rectangle)
              else disc_area_integral(D, tz))
        diff = src[None, :] - tz[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            K = grid.areas[None, :] / diff
        self_hit = np.abs(diff) < 1e-14
        K[self_hit] = 0.0
        # targets that coincide with a node subtract F(node); others use the plain sum
        hit_row = self_hit.any(axis=1)
        self.K = K
        self.diag = np.where(hit_row, KD - K.sum(axis=1), 0.0)
        self.hit_col = np.where(hit_row, np.argmax(self_hit, axis=1), 0)
        self.hit_row = hit_row
        self.wk = src ** (-self.k)
        self.zk = tz ** self.k

    def __call__(self, F: np.ndarray) -> np.ndarray:
        g = self.grid
        Fw = F[:, : g.n_nodes] * self.wk[None, :]
        S = Fw @ self.K.T
        S = S + np.where(self.hit_row[None, :], Fw[:, self.hit_col] * self.diag[None, :], 0.0)
        return (-1.0 / np.pi) * S * self.zk[None, :]


class DenseBoundaryOperator:
    """Trapezoid/midpoint ``R_k`` on the stored boundary nodes."""

    def __init__(self, grid: FactorGrid, k: int):
        self.grid, self.k = grid, int(k)
        bc = grid.boundary
        z = grid.nodes
        self.K = (bc.tangents * bc.weights * bc.nodes ** (-self.k))[None, :] / (
            bc.nodes[None, :] - z[:, None]) / (2j * np.pi)
        self.zk = z ** self.k

    def __call__(self, F: np.ndarray) -> np.ndarray:
        g = self.grid
        res = (F[:, g.n_nodes:] @ self.K.T) * self.zk[None, :]
        return np.concatenate([res, np.full((F.shape[0], g.n_boundary), np.nan + 0j)], axis=1)


def area_operator(grid: FactorGrid, k: int = 0):
    """Cached fibre operator for ``I_k`` on ``grid`` (maps samples -> samples)."""
    key = ("area", int(k))
    if key not in grid._cache:
        grid._cache[key] = (DiscAreaOperator(grid, k) if grid.kind == "polar"
                            else DenseAreaOperator(grid, k))
    return grid._cache[key]


def boundary_operator(grid: FactorGrid, k: int = 0):
    key = ("boundary", int(k))
    if key not in grid._cache:
        grid._cache[key] = (DiscBoundaryOperator(grid, k) if grid.kind == "polar"
                            else DenseBoundaryOperator(grid, k))
    return grid._cache[key]


# ---------------------------------------------------------------------------
# user-level transforms

def _as_field(f, grid: FactorGrid) -> ScalarField:
    if isinstance(f, ScalarField):
        return f
    if callable(f):
        return ScalarField.from_function(f, grid)
    return ScalarField(grid, f)


def weighted_cauchy_area(f, grid: FactorGrid, k: int, z, *, check: bool = True) -> np.ndarray:
    """``I_k f(z)`` at arbitrary points ``z`` of the domain.

    Parameters
    ----------
    f : ScalarField, callable or array
        The integrand, sampled at the grid nodes.
    grid : FactorGrid
        Grid of the planar domain.
    k : int
        Weight exponent.
    z : complex or array
        Target points inside the (closed) domain.
    """
    field = _as_field(f, grid)
    z_arr = np.asarray(z, complex)
    D = grid.domain
    if not np.all(D.contains(z_arr) | (np.abs(D.boundary_distance(z_arr)) < 1e-12)):
        raise ValueError("target point outside the domain")
    if check:
        check_integrable(field.node_values, grid, k)
    if not np.any(field.node_values):
        return np.zeros(z_arr.shape, complex)
    if grid.kind == "polar":
        op = area_operator(grid, k)
        return op.at_points(field.node_values, z_arr).reshape(z_arr.shape)
    return weighted_cauchy_area_direct(field, grid, k, z_arr)


def weighted_cauchy_area_direct(f, grid: FactorGrid, k: int, z) -> np.ndarray:
    """Cell-sum evaluation with the singular part of the kernel integrated exactly.

    ``sum_c (F_c - F(z)) / (w_c - z) A_c + F(z) \\int_D dA / (w - z)`` with
    ``F = f w^{-k}``; ``F(z)`` comes from the field's callable or the nearest node.
    """
    field = _as_field(f, grid)
    z = np.asarray(z, complex)
    zf = z.ravel()
    D = grid.domain
    F = field.node_values * grid.nodes ** (-k)
    Fz = field.at(zf) * zf ** (-k) if k else field.at(zf)
    KD = _rect_kernel_integral(D, zf) if isinstance(D, Rectangle) else disc_area_integral(D, zf)
    diff = grid.nodes[None, :] - zf[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = (F[None, :] - Fz[:, None]) * grid.areas[None, :] / diff
    terms[np.abs(diff) < 1e-14] = 0.0
    S = terms.sum(axis=1) + Fz * KD
    return ((-1.0 / np.pi) * S * zf**k).reshape(z.shape)


@dataclass(frozen=True)
class BoundaryValue:
    value: np.ndarray
    too_close: np.ndarray


def weighted_cauchy_boundary(g, D: PlanarDomain, k: int, z, m_b: int = 256) -> BoundaryValue:
    """Trapezoidal ``z^k / (2 pi i) \\oint g(w) w^{-k} dw / (w - z)``.

    ``g`` is a callable on the boundary or an array of ``m_b`` samples at
    :func:`boundary_nodes`.  Targets closer to the boundary than two node
    spacings are flagged in ``too_close``; the value is still returned.
    """
    bc = boundary_nodes(D, m_b)
    gv = np.asarray(g(bc.nodes) if callable(g) else g, complex)
    gv = np.broadcast_to(gv, bc.nodes.shape)
    z = np.asarray(z, complex)
    zf = z.ravel()
    if not np.all(D.contains(zf)):
        raise ValueError("target point outside the domain")
    spacing = np.max(np.abs(np.diff(np.concatenate([bc.nodes, bc.nodes[:1]]))))
    close = D.boundary_distance(zf) < 2 * spacing
    if np.any(close):
        warnings.warn("targets within two boundary spacings of bD; trapezoid accuracy degraded",
                      RuntimeWarning, stacklevel=2)
    kern = gv * bc.nodes ** (-k) * bc.tangents * bc.weights
    vals = (kern[None, :] / (bc.nodes[None, :] - zf[:, None])).sum(axis=1) / (2j * np.pi)
    return BoundaryValue((vals * zf**k).reshape(z.shape), close.reshape(z.shape))


def cauchy_pompeiu_residual(f: Callable, dbar_f: Callable, D: PlanarDomain, z,
                            resolution=(128, 256), m_b: int = 512):
    """``|f(z) - area term - boundary term|`` for the inhomogeneous Cauchy formula.

    Returns ``(residual, area_term, boundary_term)``.
    """
    grid = build_factor_grid(D, resolution)
    z = np.asarray(z, complex)
    area = weighted_cauchy_area(dbar_f, grid, 0, z)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        bdry = weighted_cauchy_boundary(f, D, 0, z, m_b=m_b).value
    fz = np.broadcast_to(np.asarray(f(z), complex), z.shape)
    return np.abs(fz - area - bdry), area, bdry


# ---------------------------------------------------------------------------
# J_R(z) = \int_{|t|<R} dV(t) / (|t|^alpha |t - z|^beta)

def kernel_integral_JR(R: float, alpha: float, beta: float, z: complex) -> float:
    """Numerical ``J_R(z)`` with the angular integral done in closed form.

    The mean of ``|t - z|^{-beta}`` over the circle ``|t| = r`` is
    ``M^{-beta} 2F1(beta/2, beta/2; 1; (m/M)^2)`` with ``M, m`` the larger
    and smaller of ``r, |z|``.  The remaining radial integral has
    integrable endpoint singularities at ``0`` and ``|z|`` and is handled by
    adaptive quadrature split at ``|z|``.
    """
    if not (0 <= alpha < 2 and 0 <= beta < 2):
        raise ValueError("need 0 <= alpha, beta < 2")
    if R <= 0:
        raise ValueError("R must be positive")
    rho = abs(complex(z))
    if rho == 0 and alpha + beta >= 2:
        raise ValueError("z must be nonzero when alpha + beta >= 2")
    if beta == 0:
        return 2 * np.pi * R ** (2 - alpha) / (2 - alpha)

    def integrand(r):
        M, m = max(r, rho), min(r, rho)
        if M == 0:
            return 0.0
        return r ** (1 - alpha) * 2 * np.pi * M ** (-beta) * hyp2f1(beta / 2, beta / 2, 1, (m / M) ** 2)

    pieces = [(0.0, min(rho, R)), (min(rho, R), R)]
    total = 0.0
    for a, b in pieces:
        if b > a:
            val, _ = quad(integrand, a, b, limit=400, epsabs=1e-13, epsrel=1e-11)
            total += val
    return float(total)


@dataclass(frozen=True)
class JRBoundCheck:
    alpha: float
    beta: float
    branch: str
    fit_z: float
    constant: float
    rows: tuple  # (z, J_R, bound, J_R / bound)
    slack: float

    @property
    def ok(self) -> bool:
        return all(r[3] <= self.slack for r in self.rows)


def jr_envelope(alpha: float, beta: float, z) -> np.ndarray:
    """The z-dependence of the bound on ``J_R``: ``1``, ``1 + |log|z||`` or ``|z|^{2-alpha-beta}``."""
    r = np.abs(np.asarray(z, complex))
    g = alpha + beta
    if g < 2:
        return np.ones_like(r)
    if g == 2:
        return 1.0 + np.abs(np.log(r))
    return r ** (2.0 - g)


def jr_bound_check(alpha: float, beta: float, R: float = 1.0, levels: int = 8,
                   slack: float = 1.05) -> JRBoundCheck:
    """Fit ``C`` in ``J_R(z) <= C * envelope(z)`` at one dyadic ``z``, verify at the others.

    The sweep is ``z = 2^{-j}``, ``j = 1..levels``.  The constant is fitted
    where the ratio ``J_R / envelope`` is expected to be largest: at the
    smallest ``z`` for the bounded and power branches, at ``j = 1`` for the
    logarithmic branch (there ``J_R`` grows like ``|log|z||`` with a smaller
    additive constant than the envelope's ``1``).
    """
    zs = [2.0**-j for j in range(1, levels + 1)]
    g = alpha + beta
    branch = "bounded" if g < 2 else ("log" if g == 2 else "power")
    fit = zs[0] if branch == "log" else zs[-1]
    C = kernel_integral_JR(R, alpha, beta, fit) / float(jr_envelope(alpha, beta, fit))
    rows = []
    for z in zs:
        if z == fit:
            continue
        J = kernel_integral_JR(R, alpha, beta, z)
        b = C * float(jr_envelope(alpha, beta, z))
        rows.append((z, J, b, J / b))
    return JRBoundCheck(alpha, beta, branch, fit, C, tuple(rows), slack)


def area_transform_reference(u: Callable, dbar_u: Callable, D: Disc, k: int, z,
                             m_b: int = 2048, n_theta: int = 256) -> np.ndarray:
    """Reference values of ``I_k f`` with ``f = du/dzbar`` on a disc, without area quadrature.

    ``I_0 f = u - (boundary Cauchy integral of u)`` by the Cauchy-Pompeiu
    formula; the boundary integral uses a dense trapezoid rule, which
    converges geometrically for smooth ``u``.  For ``k >= 1`` the partial
    fractions ``1 / (w^k (w - z)) = z^{-k} (1/(w - z) - sum_{j<k} z^j w^{-j-1})``
    give ``I_k f = I_0 f - sum_{j<k} z^j m_j`` with moments
    ``m_j = -(1/pi) \\int f w^{-j-1} dA``, computed in polar coordinates.
    """
    z = np.asarray(z, complex)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        bd = weighted_cauchy_boundary(u, D, 0, z, m_b=m_b).value
    out = np.broadcast_to(np.asarray(u(z), complex), z.shape) - bd
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    for j in range(int(k)):
        def radial(r, part, j=j):
            w = D.center + r * np.exp(1j * th)
            val = np.mean(np.asarray(dbar_u(w), complex) * (w ** (-j - 1))) * 2 * np.pi * r
            return val.real if part == 0 else val.imag
        re, _ = quad(radial, 0.0, D.radius, args=(0,), limit=200, epsabs=1e-13)
        im, _ = quad(radial, 0.0, D.radius, args=(1,), limit=200, epsabs=1e-13)
        out = out - z**j * (-(re + 1j * im) / np.pi)
    return out
