"""Local solution operator for the weighted d-bar equation on product domains.

Given a ``dbar_c``-closed (0,q)-form ``omega`` on ``P = D_1 x ... x D_n``
and an inner product domain ``Q = G_1 x ... x G_n``, cutoffs ``chi_j``
(equal to 1 near ``G_j``, compactly supported in ``D_j``) drive the
induction, for ``j = n, ..., q``::

    eta^j       = I_{c_j}^{(j)}(chi_j omega^j)
    omega^{j-1} = I_{c_j}^{(j)}(dbar chi_j ^ omega^j)
    theta^j     = I_{c_j}^{(j)}(chi_j dbar_c omega^j)

with ``omega^n = omega`` and ``eta = sum_j eta^j``; then
``dbar_c eta = omega`` on ``Q``.  ``dbar_c omega^j`` is propagated by the
exact recursion ``dbar_c omega^{j-1} = dbar chi_j ^ omega^j -
I_{c_j}(dbar chi_j ^ dbar_c omega^j)`` rather than by differencing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .analysis import weighted_lp_norm
from .domain import Disc, ProductDomain, ProductGrid, Rectangle, build_grid
from .forms import Form0q, dbar_numeric, dbar_weighted, gamma_class
from .homotopy import axis_area_op
from .library import SymbolicForm, symbolic_form
from .weights import as_exponent, as_rational, dbar_weight_multi, modified_dbar_weight_multi

__all__ = [
    "Cutoff",
    "CutoffFamily",
    "make_cutoffs",
    "SolveConfig",
    "SolveTrace",
    "SupportError",
    "ClosednessError",
    "lemma41_residual",
    "solve",
    "verify_solution",
    "form_norm",
    "calibration_dbar_error",
    "cutoff_trace_calibration",
]


class SupportError(ValueError):
    """The input is not compactly supported along the integration axis."""


class ClosednessError(ValueError):
    """The input is not dbar_c-closed to grid accuracy."""


def _phi(x):
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        return np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)


def _dphi(x):
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        xs = np.where(x > 0, x, 1.0)
        return np.where(x > 0, np.exp(-1.0 / xs) / xs**2, 0.0)


def smoothstep(t):
    """``1`` for ``t <= 0``, ``0`` for ``t >= 1``, smooth in between."""
    t = np.asarray(t, float)
    A, B = _phi(1 - t), _phi(t)
    return A / (A + B)


def smoothstep_derivative(t):
    t = np.asarray(t, float)
    A, B = _phi(1 - t), _phi(t)
    dA, dB = -_dphi(1 - t), _dphi(t)
    return (dA * B - A * dB) / (A + B) ** 2


@dataclass(frozen=True)
class Cutoff:
    """A cutoff on one planar factor.

    Discs: radial in ``rho = |z - center|``, equal to 1 for ``rho <= inner``
    and 0 for ``rho >= outer``.  Rectangles: product of 1-D steps in the
    distance to the inner box along ``x`` and ``y``.
    """

    domain: object
    inner_domain: object
    inner: float
    outer: float
    center: complex = 0j

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, complex)
        if isinstance(self.domain, Disc):
            rho = np.abs(z - self.center)
            return smoothstep((rho - self.inner) / (self.outer - self.inner))
        sx, sy = self._steps(z)
        return sx[0] * sy[0]

    def _steps(self, z):
        G = self.inner_domain
        w = self.outer - self.inner
        out = []
        for coord, lo, hi in ((z.real, G.corner_lo.real, G.corner_hi.real),
                              (z.imag, G.corner_lo.imag, G.corner_hi.imag)):
            d = np.maximum(lo - coord, coord - hi)  # signed distance outside the inner box
            t = (d - self.inner) / w
            ds = np.where(coord > hi, 1.0, -1.0)
            out.append((smoothstep(t), smoothstep_derivative(t) * ds / w))
        return out

    def dbar(self, z) -> np.ndarray:
        """Closed-form ``d chi / d zbar``."""
        z = np.asarray(z, complex)
        if isinstance(self.domain, Disc):
            u = z - self.center
            rho = np.abs(u)
            t = (rho - self.inner) / (self.outer - self.inner)
            dr = smoothstep_derivative(t) / (self.outer - self.inner)
            with np.errstate(invalid="ignore", divide="ignore"):
                e = np.where(rho > 0, u / np.where(rho > 0, rho, 1.0), 0.0)
            return 0.5 * e * dr
        (sx, dx), (sy, dy) = self._steps(z)
        return 0.5 * (dx * sy + 1j * sx * dy)

    def _params(self, z):
        """Transition parameters: one for discs, one per edge direction for rectangles."""
        z = np.asarray(z, complex)
        w = self.outer - self.inner
        if isinstance(self.domain, Disc):
            return [(np.abs(z - self.center) - self.inner) / w]
        G = self.inner_domain
        return [(np.maximum(lo - x, x - hi) - self.inner) / w
                for x, lo, hi in ((z.real, G.corner_lo.real, G.corner_hi.real),
                                  (z.imag, G.corner_lo.imag, G.corner_hi.imag))]

    def plateau(self, z) -> np.ndarray:
        """Points of the declared plateau; ``chi == 1`` and ``dbar chi == 0`` there."""
        return np.logical_and.reduce([t <= 0 for t in self._params(z)])

    def band(self, z) -> np.ndarray:
        """Points where ``dbar chi`` may be nonzero."""
        ts = self._params(z)
        outside = np.logical_or.reduce([t >= 1 for t in ts])
        return ~self.plateau(z) & ~outside


@dataclass(frozen=True)
class CutoffFamily:
    cutoffs: Tuple[Cutoff, ...]

    def __getitem__(self, j: int) -> Cutoff:
        return self.cutoffs[j - 1]

    def __len__(self):
        return len(self.cutoffs)


def make_cutoffs(P: ProductDomain, Q: ProductDomain, margins=(0.05, 0.05)) -> CutoffFamily:
    """Cutoffs equal to 1 on ``G_j`` enlarged by ``margins[0]`` and vanishing
    within ``margins[1]`` of ``bD_j``."""
    m_in, m_out = (float(x) for x in margins)
    if m_in <= 0 or m_out <= 0:
        raise ValueError("margins must be positive")
    out = []
    for D, G in zip(P.factors, Q.factors):
        if isinstance(D, Disc) and isinstance(G, Disc):
            inner = G.radius + m_in
            outer = D.radius - abs(G.center - D.center) - m_out
            out.append(Cutoff(D, G, inner, outer, G.center))
        elif isinstance(D, Rectangle) and isinstance(G, Rectangle):
            gap = min(G.corner_lo.real - D.corner_lo.real, G.corner_lo.imag - D.corner_lo.imag,
                      D.corner_hi.real - G.corner_hi.real, D.corner_hi.imag - G.corner_hi.imag)
            inner, outer = m_in, gap - m_out
            out.append(Cutoff(D, G, inner, outer))
        else:
            raise ValueError("P and Q factors must both be discs or both rectangles")
        if not outer > inner:
            raise ValueError(f"infeasible margins {margins} for {G} inside {D}")
    return CutoffFamily(tuple(out))


@dataclass
class SolveConfig:
    """Parameters of a weighted solve.

    ``resolution`` follows :func:`build_grid`; ``mode`` is ``"full"``
    (weight ``c = k(p,s)``, target weight ``s+``) or ``"modified"``
    (``c = k~(p,s)``, target weight ``s``).
    """

    P: ProductDomain
    Q: ProductDomain
    p: object = 2
    s: Sequence = (0,)
    mode: str = "full"
    epsilon: Fraction = Fraction(1, 10)
    resolution: object = 64
    margins: Tuple[float, float] = (0.05, 0.05)
    n_jobs: int = 1
    closed_factor: float = 10.0

    def __post_init__(self):
        self.p = as_exponent(self.p)
        s = [as_rational(x) for x in np.atleast_1d(np.asarray(self.s, dtype=object))]
        if len(s) == 1 and self.P.n > 1:
            s = s * self.P.n
        if len(s) != self.P.n:
            raise ValueError(f"weight vector has {len(s)} entries, expected {self.P.n}")
        self.s = tuple(s)
        self.epsilon = as_rational(self.epsilon)
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.mode not in ("full", "modified"):
            raise ValueError("mode must be 'full' or 'modified'")
        if self.Q.n != self.P.n:
            raise ValueError("P and Q must have the same dimension")
        for D, G in zip(self.P.factors, self.Q.factors):
            if not _compactly_inside(G, D):
                raise ValueError(f"{G} is not relatively compact in {D}")

    @property
    def c(self) -> Tuple[int, ...]:
        if self.mode == "full":
            return dbar_weight_multi(self.p, self.s)
        return modified_dbar_weight_multi(self.p, self.s)

    @property
    def k_tilde(self) -> Tuple[int, ...]:
        return modified_dbar_weight_multi(self.p, self.s)

    @property
    def s_plus(self) -> Tuple[Fraction, ...]:
        if self.mode == "modified":
            return self.s
        return self.s[:-1] + (self.s[-1] + 1 - self.epsilon,)

    def grid(self) -> ProductGrid:
        return build_grid(self.P, self.resolution)


def _compactly_inside(G, D) -> bool:
    if isinstance(D, Disc) and isinstance(G, Disc):
        return abs(G.center - D.center) + G.radius < D.radius
    if isinstance(D, Rectangle) and isinstance(G, Rectangle):
        return (G.corner_lo.real > D.corner_lo.real and G.corner_lo.imag > D.corner_lo.imag
                and G.corner_hi.real < D.corner_hi.real and G.corner_hi.imag < D.corner_hi.imag)
    return False


@dataclass
class SolveTrace:
    omega: Dict[int, Form0q] = field(default_factory=dict)
    dbar_c_omega: Dict[int, Form0q] = field(default_factory=dict)
    eta: Dict[int, Form0q] = field(default_factory=dict)
    theta: Dict[int, Form0q] = field(default_factory=dict)
    gamma_flags: Dict[int, bool] = field(default_factory=dict)
    cutoffs: CutoffFamily | None = None


def form_norm(omega: Form0q, p, s) -> float:
    """Weighted norm of the pointwise modulus ``(sum_J |a_J|^2)^{1/2}``."""
    mod = np.zeros(omega.grid.shape)
    for a in omega.coeffs.values():
        mod = mod + np.abs(np.nan_to_num(a)) ** 2
    return weighted_lp_norm(np.sqrt(mod), p, [float(x) for x in s], omega.grid).value


def calibration_dbar_error(grid: ProductGrid, q: int) -> float:
    """Finite-difference ``dbar`` of a known closed (0,q)-form, sup over interior nodes.

    The calibration form is ``dbar(h dz_1 ^ ... ^ dz_{q-1})`` with a smooth
    non-polynomial ``h``; its exact ``dbar`` vanishes, so the sup is the
    grid's own differentiation error.
    """
    n = grid.n
    if q >= n + 1 or q < 1:
        return 0.0
    h = "*".join(f"exp(zb{j}*z{j}/2)" for j in range(1, n + 1))
    base = symbolic_form(n, q - 1, {tuple(range(1, q)): h})
    closed = base.dbar()
    if not closed.coeffs or q == n:
        # the closedness test is vacuous in top degree
        return 0.0
    w = Form0q.from_symbolic(closed, grid)
    return dbar_numeric(w).sup_norm(grid.interior_mask(2.0))


def cutoff_trace_calibration(grid: ProductGrid, cutoffs: "CutoffFamily", c, margin: float = 2.0) -> float:
    """Relative error of ``dbar I_{c_j}(zbar_j dbar chi_j)`` against ``zbar_j dbar chi_j``.

    The trace law differentiates area integrals of cutoff derivatives, so
    its numerical accuracy is bounded by how well the grid resolves the
    cutoff transition.  This one-factor experiment measures exactly that
    and returns the worst axis.
    """
    worst = 0.0
    for j, fac in enumerate(grid.factors, start=1):
        g1 = ProductGrid((fac,))
        z = g1.coordinate(1)
        F = np.conj(z) * cutoffs[j].dbar(z)
        form = Form0q(g1, 1, {(1,): F})
        lhs = dbar_numeric(axis_area_op(form, 1, int(c[j - 1])))
        scale = max(form.sup_norm(), 1e-300)
        worst = max(worst, (lhs - form).sup_norm(g1.interior_mask(margin)) / scale)
    return worst


def _sample(omega, grid):
    return Form0q.from_symbolic(omega, grid) if isinstance(omega, SymbolicForm) else omega


def _dbar_c_input(omega, w: Form0q, c) -> Form0q | None:
    if w.q == w.n:
        return None
    if isinstance(omega, SymbolicForm) or w.source is not None:
        src = omega if isinstance(omega, SymbolicForm) else w.source
        return Form0q.from_symbolic(src.dbar(), w.grid)
    return dbar_weighted(w, c)


def solve(omega, cfg: SolveConfig, grid: ProductGrid | None = None, check_closed: bool = True):
    """Solve ``dbar_c eta = omega`` on ``Q``.

    Parameters
    ----------
    omega : SymbolicForm or Form0q
        A ``dbar_c``-closed (0,q)-form, ``q >= 1``.
    cfg : SolveConfig
    grid : ProductGrid, optional
        Defaults to ``cfg.grid()``.

    Returns
    -------
    eta : Form0q
    trace : SolveTrace
    """
    grid = grid or cfg.grid()
    w = _sample(omega, grid)
    q, n = w.q, w.n
    if q < 1:
        raise ValueError("solve needs a form of degree q >= 1")
    c = cfg.c
    if check_closed:
        d = _dbar_c_input(omega, w, c)
        if d is not None:
            mask = grid.interior_mask(2.0)
            tol = cfg.closed_factor * max(calibration_dbar_error(grid, q), 1e-12) * max(1.0, w.sup_norm())
            if d.sup_norm(mask) > tol:
                raise ClosednessError(f"input is not dbar_c-closed: residual {d.sup_norm(mask):.3e} > {tol:.3e}")
    fam = make_cutoffs(cfg.P, cfg.Q, cfg.margins)
    zs = grid.coordinates()
    chi = [fam[j](zs[j - 1]) for j in range(1, n + 1)]
    dchi = [fam[j].dbar(zs[j - 1]) for j in range(1, n + 1)]

    tr = SolveTrace(cutoffs=fam)
    tr.omega[n] = w
    tr.dbar_c_omega[n] = Form0q.zeros(grid, q + 1) if q < n else None
    eta = Form0q.zeros(grid, q - 1)
    for j in range(n, q - 1, -1):
        wj = tr.omega[j]
        cj = int(c[j - 1])
        tr.gamma_flags[j] = gamma_class(wj, None, j)
        if not tr.gamma_flags[j]:
            raise AssertionError(f"omega^{j} has components beyond index {j}")
        tr.eta[j] = axis_area_op(wj * chi[j - 1], j, cj, n_jobs=cfg.n_jobs)
        eta = eta + tr.eta[j]
        dw = tr.dbar_c_omega[j]
        if q < n:
            tr.theta[j] = axis_area_op(dw * chi[j - 1], j, cj, n_jobs=cfg.n_jobs)
        else:
            tr.theta[j] = Form0q.zeros(grid, q)
        if q < n:
            tr.omega[j - 1] = axis_area_op(wj.wedge_dzbar(j, dchi[j - 1]), j, cj, n_jobs=cfg.n_jobs)
        else:
            # dbar chi_j ^ omega^j is a (0, n+1)-form, hence zero
            tr.omega[j - 1] = Form0q.zeros(grid, q)
        if q < n:
            nxt = wj.wedge_dzbar(j, dchi[j - 1])
            if dw.q + 1 <= n:
                nxt = nxt - axis_area_op(dw.wedge_dzbar(j, dchi[j - 1]), j, cj, n_jobs=cfg.n_jobs)
            tr.dbar_c_omega[j - 1] = nxt
        else:
            tr.dbar_c_omega[j - 1] = None
    return eta, tr


def _q_mask(grid: ProductGrid, Q: ProductDomain, margin: float = 0.0) -> np.ndarray:
    masks = []
    for fac, G in zip(grid.factors, Q.factors):
        m = G.contains(fac.nodes)
        if margin:
            m &= G.boundary_distance(fac.nodes) > margin * fac.radial_step
        masks.append(m)
    return grid.mask_from_factor_masks(masks)


def _union_S_mask(grid: ProductGrid, Q: ProductDomain, axes) -> np.ndarray:
    """Nodes where some ``z_l`` (``l`` in ``axes``) lies outside ``G_l``."""
    out = np.zeros(grid.shape, bool)
    for l in axes:
        masks = []
        for e, (fac, G) in enumerate(zip(grid.factors, Q.factors), start=1):
            masks.append(~G.contains(fac.nodes) if e == l else np.ones(fac.n_nodes, bool))
        out |= grid.mask_from_factor_masks(masks)
    return out


def verify_solution(eta: Form0q, omega, cfg: SolveConfig, trace: SolveTrace | None = None,
                    Q: ProductDomain | None = None, tol: float = 2e-2,
                    calibration_factor: float = 3.0) -> dict:
    """Residual of ``dbar_c eta = omega`` on ``Q``, weighted norms and trace assertions.

    The trace-law check compares a finite-difference ``dbar`` of an area
    integral against its closed form.  Its tolerance is
    ``max(tol, calibration_factor * cal)`` where ``cal`` is
    :func:`cutoff_trace_calibration` on the same grid; both the raw value
    and ``cal`` are reported.
    """
    grid = eta.grid
    w = _sample(omega, grid)
    Q = Q or cfg.Q
    qmask = _q_mask(grid, Q)
    # off the divisor dbar_c = dbar pointwise; difference the smooth eta directly
    res_form = dbar_numeric(eta) - w if eta.q < eta.n else w
    residual = res_form.sup_norm(qmask)
    report = {
        "residual_on_Q": residual,
        "norm_eta": form_norm(eta, cfg.p, cfg.s_plus),
        "norm_omega": form_norm(w, cfg.p, cfg.s),
    }
    src = report["norm_omega"]
    report["ratio"] = report["norm_eta"] / src if src > 0 else 0.0
    checks = {}
    if trace is not None:
        n, q = w.n, w.q
        scale = max(w.sup_norm(), 1e-300)
        interior = grid.interior_mask(2.0)
        e15, e16, e17, e18 = [], [], [], []
        for j in range(n - 1, q - 2, -1):
            wj = trace.omega[j]
            e15.append(gamma_class(wj, None, max(j, 0)) if j >= 1 else wj.is_zero())
        for j in range(n, q - 1, -1):
            if j - 1 >= q and q < n:
                lhs = dbar_numeric(trace.omega[j - 1])
                fam = trace.cutoffs
                zj = grid.coordinate(j)
                dch = fam[j].dbar(zj)
                rhs = trace.omega[j].wedge_dzbar(j, dch)
                dw = trace.dbar_c_omega[j]
                if dw.q + 1 <= n:
                    rhs = rhs - axis_area_op(dw.wedge_dzbar(j, dch), j, int(cfg.c[j - 1]))
                e16.append((lhs - rhs).sup_norm(interior) / scale)
            if j < n and trace.dbar_c_omega[j] is not None:
                d = trace.dbar_c_omega[j]
                outside = ~_union_S_mask(grid, Q, range(j + 1, n + 1))
                nodes = grid.mask_from_factor_masks([np.ones(f.n_nodes, bool) for f in grid.factors])
                tot = sum(float(np.nansum(np.abs(a[nodes]))) for a in d.coeffs.values())
                bad = sum(float(np.nansum(np.abs(a[outside & nodes]))) for a in d.coeffs.values())
                e17.append(bad / tot if tot > 0 else 0.0)
            th = trace.theta.get(j)
            if th is not None:
                e18.append(th.sup_norm(qmask) / scale)
        cal = cutoff_trace_calibration(grid, trace.cutoffs, cfg.c) if e16 else 0.0
        tol16 = max(tol, calibration_factor * cal)
        checks = {
            "gamma_pattern": all(e15),
            "trace_law": max(e16, default=0.0),
            "trace_law_calibration": cal,
            "trace_law_tolerance": tol16,
            "dbar_support_mass": max(e17, default=0.0),
            "theta_on_Q": max(e18, default=0.0),
        }
        checks["ok"] = (checks["gamma_pattern"] and checks["trace_law"] <= tol16
                        and checks["dbar_support_mass"] <= 1e-3 and checks["theta_on_Q"] <= 1e-3)
    report["trace_assertions"] = checks
    return report


def lemma41_residual(omega, grid: ProductGrid, m, e: int, dbar_m_omega: Form0q | None = None,
                     require_support: bool = True, support_margin: float = 1.0,
                     margin: float = 2.0) -> float:
    """Sup over interior nodes of ``omega - dbar_m I_{m_e} omega - I_{m_e} dbar_m omega``.

    The identity needs ``omega`` compactly supported in ``D_e``.  With
    ``require_support`` (default) a :class:`SupportError` is raised when
    any coefficient is nonzero within ``support_margin`` grid steps of
    ``bD_e``; pass ``False`` to evaluate the residual anyway.
    """
    w = _sample(omega, grid)
    m = np.broadcast_to(np.asarray(m, int), (w.n,))
    fac = grid.factors[e - 1]
    if require_support:
        near = ~fac.interior_mask(support_margin)
        masks = [np.ones(f.n_nodes, bool) for f in grid.factors]
        masks[e - 1] = near
        mk = grid.mask_from_factor_masks(masks)
        if w.sup_norm(mk) > 0:
            raise SupportError(f"omega is not compactly supported along axis {e}")
    if dbar_m_omega is None and w.q < w.n:
        dbar_m_omega = (Form0q.from_symbolic(omega.dbar(), grid) if isinstance(omega, SymbolicForm)
                        else dbar_weighted(w, m))
    me = int(m[e - 1])
    res = w.copy()
    if w.q >= 1:
        res = res - dbar_numeric(axis_area_op(w, e, me))
    if dbar_m_omega is not None:
        res = res - axis_area_op(dbar_m_omega, e, me)
    return res.sup_norm(grid.interior_mask(margin))
