"""Axis-wise Cauchy operators on product domains and the d-bar homotopy formula.

For a (0,q)-form ``omega`` and an axis ``e``:

* ``I_k^{(e)} omega`` applies the weighted area transform in ``z_e`` to
  every component containing ``dz_e`` and returns the coefficient of
  ``dz_{J \\ e}`` (after moving ``dz_e`` to the front).
* ``R_k^{(e)} omega`` applies the boundary transform in ``z_e`` to every
  component without ``dz_e``; the result is holomorphic in ``z_e``.

On ``P`` minus the ``e``-th face, ``omega = dbar I_0 omega + I_0 dbar omega + R_0 omega``.
Iterating from ``e = n`` down to ``q`` gives

    S_q omega  = sum_{k=q}^{n} I^{(k)} R^{(k+1)} ... R^{(n)} omega,
    T_{q+1} theta = sum_{k=q}^{n} I^{(k)} R^{(k+1)} ... R^{(n)} theta,

and ``omega = dbar S_q omega + T_{q+1} dbar omega``.  ``T`` is written
with ``R`` applied to ``theta = dbar omega`` directly, using that ``dbar``
commutes with the boundary operators.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List

import numpy as np

from .cauchy import apply_along_axis, area_operator, boundary_operator, check_integrable
from .domain import ProductGrid
from .forms import Form0q, dbar_numeric, gamma_class, wedge_sign
from .library import SymbolicForm

__all__ = [
    "AxisOperatorSpec",
    "axis_area_op",
    "axis_boundary_op",
    "fiber_holomorphy_defect",
    "lemma35_residual",
    "S_q",
    "T_q1",
    "homotopy_residual",
    "substitution_residual",
    "GammaClassError",
    "HomotopyReport",
]


class GammaClassError(AssertionError):
    """An intermediate form left the expected class (a sign or ordering bug)."""


@dataclass(frozen=True)
class AxisOperatorSpec:
    e: int
    k: int = 0
    n_jobs: int = 1

    def check(self, n: int):
        if not 1 <= self.e <= n:
            raise ValueError(f"axis e={self.e} out of range 1..{n}")


def _fiber(grid: ProductGrid, e: int, op, a: np.ndarray, n_jobs: int) -> np.ndarray:
    return apply_along_axis(op, a, e - 1, n_jobs=n_jobs)


def axis_area_op(omega: Form0q, e: int, k: int = 0, n_jobs: int = 1, check: bool = True) -> Form0q:
    """``I_k`` in the variable ``z_e``; lowers the degree by one."""
    AxisOperatorSpec(e, k).check(omega.n)
    if omega.q < 1:
        raise ValueError("the area operator acts on forms of degree >= 1")
    fac = omega.grid.factors[e - 1]
    op = area_operator(fac, k)
    out: Dict[tuple, np.ndarray] = {}
    for J, a in omega.coeffs.items():
        if e not in J:
            continue
        if check and k > 0:
            check_integrable(np.moveaxis(a, e - 1, -1), fac, k)
        L = tuple(j for j in J if j != e)
        val = wedge_sign(e, J) * _fiber(omega.grid, e, op, a, n_jobs)
        out[L] = out[L] + val if L in out else val
    return Form0q(omega.grid, omega.q - 1, out)


def axis_boundary_op(omega: Form0q, e: int, k: int = 0, n_jobs: int = 1) -> Form0q:
    """``R_k`` in the variable ``z_e``; boundary samples along axis ``e`` become NaN."""
    AxisOperatorSpec(e, k).check(omega.n)
    fac = omega.grid.factors[e - 1]
    op = boundary_operator(fac, k)
    out = {L: _fiber(omega.grid, e, op, a, n_jobs) for L, a in omega.coeffs.items() if e not in L}
    return Form0q(omega.grid, omega.q, out)


def fiber_holomorphy_defect(omega: Form0q, e: int) -> float:
    """Relative size of the non-holomorphic part of ``omega`` along ``z_e``.

    Polar factors: on each node circle the Cauchy integral of a
    holomorphic function reproduces it, i.e. the negative angular Fourier
    modes vanish; the largest negative-mode amplitude relative to the
    largest coefficient is returned.  Rectangles use the finite-difference
    ``d/d zbar_e`` relative to the coefficient size.
    """
    fac = omega.grid.factors[e - 1]
    worst, scale = 0.0, 0.0
    sl = list(omega.grid.node_slices())
    for a in omega.coeffs.values():
        x = np.moveaxis(a[tuple(sl)], e - 1, -1)
        scale = max(scale, float(np.nanmax(np.abs(x))) if x.size else 0.0)
        if fac.kind == "polar":
            nr, nt = fac.shape
            m = np.fft.fft(x.reshape(x.shape[:-1] + (nr, nt)), axis=-1) / nt
            neg = m[..., nt // 2 + 1:]
            worst = max(worst, float(np.nanmax(np.abs(neg))) if neg.size else 0.0)
        else:
            from .forms import dbar_axis
            d = dbar_axis(a, omega.grid, e)[tuple(sl)]
            worst = max(worst, float(np.nanmax(np.abs(d))) * fac.radial_step)
    return worst / scale if scale > 0 else 0.0


def _sample(omega, grid: ProductGrid) -> Form0q:
    if isinstance(omega, SymbolicForm):
        return Form0q.from_symbolic(omega, grid)
    return omega


def _dbar_of(omega, grid: ProductGrid) -> Form0q:
    """``dbar omega`` exactly when symbolic, by finite differences otherwise."""
    if isinstance(omega, SymbolicForm):
        if omega.q == omega.n:
            return None
        return Form0q.from_symbolic(omega.dbar(), grid)
    src = omega.source
    if src is not None and omega.q < omega.n:
        return Form0q.from_symbolic(src.dbar(), grid)
    return dbar_numeric(omega) if omega.q < omega.n else None


def _residual(form: Form0q, margin: float) -> float:
    return form.sup_norm(form.grid.interior_mask(margin))


def lemma35_residual(omega, grid: ProductGrid, e: int, margin: float = 2.0, n_jobs: int = 1) -> float:
    """Sup over interior nodes of ``omega - dbar I omega - I dbar omega - R omega`` on axis ``e``."""
    w = _sample(omega, grid)
    q = w.q
    d = _dbar_of(omega, grid)
    res = w - dbar_numeric(axis_area_op(w, e, n_jobs=n_jobs)) if q >= 1 else w.copy()
    if d is not None:
        res = res - axis_area_op(d, e, n_jobs=n_jobs)
    res = res - axis_boundary_op(w, e, n_jobs=n_jobs)
    return _residual(res, margin)


@dataclass
class HomotopyReport:
    residual: float
    gamma_ok: bool
    holomorphy_defects: List[float]
    vanishing_norm: float


def _chain(theta: Form0q, q: int, n_jobs: int, checks: list | None) -> Form0q:
    """``sum_{k=q}^{n} I^{(k)} R^{(k+1)} ... R^{(n)} theta`` with class assertions."""
    n = theta.n
    cur = theta
    total = None
    for k in range(n, q - 1, -1):
        if cur.q >= 1:
            term = axis_area_op(cur, k, n_jobs=n_jobs)
            total = term if total is None else total + term
        if k > q:
            nxt = axis_boundary_op(cur, k, n_jobs=n_jobs)
            # boundary outputs drop dz_k and are holomorphic in z_k
            if not gamma_class(nxt, None, k - 1):
                raise GammaClassError(f"boundary operator on axis {k} left the class Gamma_{k - 1}")
            if checks is not None:
                checks.append(fiber_holomorphy_defect(nxt, k))
            cur = nxt
    if total is None:
        total = Form0q.zeros(theta.grid, theta.q - 1)
    return total


def S_q(omega, grid: ProductGrid | None = None, n_jobs: int = 1, checks: list | None = None) -> Form0q:
    """The homotopy operator on a (0,q)-form; returns a (0,q-1)-form."""
    w = _sample(omega, grid) if grid is not None else omega
    if w.q < 1:
        raise ValueError("S_q needs q >= 1")
    return _chain(w, w.q, n_jobs, checks)


def T_q1(theta: Form0q, q: int, n_jobs: int = 1, checks: list | None = None) -> Form0q:
    """``T_{q+1}`` applied to the (0,q+1)-form ``theta`` (normally ``dbar omega``)."""
    if theta is None or theta.q != q + 1:
        raise ValueError("T_{q+1} acts on (0, q+1)-forms")
    return _chain(theta, q, n_jobs, checks)


def homotopy_residual(omega, grid: ProductGrid, margin: float = 2.0, n_jobs: int = 1,
                      report: bool = False):
    """Sup over interior nodes of ``omega - dbar S_q omega - T_{q+1} dbar omega``.

    With ``report=True`` a :class:`HomotopyReport` is returned, including
    the fibre-holomorphy defects of every boundary stage and the size of
    ``R^{(q)} R^{(q+1)} ... R^{(n)} omega`` (which must vanish).
    """
    w = _sample(omega, grid)
    q = w.q
    checks: list = []
    S = S_q(w, n_jobs=n_jobs, checks=checks)
    res = w - dbar_numeric(S)
    d = _dbar_of(omega, grid)
    if d is not None and q < w.n:
        res = res - T_q1(d, q, n_jobs=n_jobs, checks=checks)
    r = _residual(res, margin)
    if not report:
        return r
    cur = w
    for k in range(w.n, q - 1, -1):
        cur = axis_boundary_op(cur, k, n_jobs=n_jobs)
    van = _residual(cur, margin)
    return HomotopyReport(r, True, checks, van)


def substitution_residual(omega, grid: ProductGrid, margin: float = 2.0, n_jobs: int = 1) -> float:
    """Check ``dbar R^{(n)} omega = dbar omega - dbar I^{(n)} dbar omega`` numerically."""
    w = _sample(omega, grid)
    n = w.n
    d = _dbar_of(omega, grid)
    lhs = dbar_numeric(axis_boundary_op(w, n, n_jobs=n_jobs))
    rhs = d - dbar_numeric(axis_area_op(d, n, n_jobs=n_jobs)) if w.q + 1 < n else d - d
    return _residual(lhs - rhs, margin)
