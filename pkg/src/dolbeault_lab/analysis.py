"""Weighted L^p norms, empirical operator norms and the witness functions.

The weighted norm of ``f`` on a domain is ``|| |z|^{-s} f ||_{L^p}``; on a
product grid the weight is ``prod_e |z_e|^{-s_e}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, List, Sequence

import numpy as np
from scipy.integrate import quad

from .cauchy import area_operator, check_integrable, NonIntegrableError
from .domain import Disc, FactorGrid, ProductGrid, build_factor_grid, build_grid
from .weights import (LebesgueExponent, as_exponent, as_rational, dbar_weight,
                      modified_dbar_weight)

__all__ = [
    "WeightedNorm",
    "weighted_lp_norm",
    "weighted_lp_norm_sweep",
    "weighted_norm_converges",
    "detect_divergence",
    "TestFamily",
    "operator_norm_sample",
    "RadialProfile",
    "radial_norm_sweep",
    "witness_suite",
    "WitnessCase",
]


@dataclass(frozen=True)
class WeightedNorm:
    value: float
    diverging: bool = False

    def __float__(self):
        return self.value


def _as_product(grid) -> ProductGrid:
    return grid if isinstance(grid, ProductGrid) else ProductGrid((grid,))


def _reduce_factor(g: np.ndarray, fac: FactorGrid, wexp: float = 0.0, unit: float = 1.0) -> np.ndarray:
    """Integrate ``|z|^wexp g`` over the last axis (factor nodes), ``g >= 0``.

    On origin-centred polar grids the innermost ring is integrated exactly
    in the radius with ``g ~ g0 (rho / r0)^b`` along each ray.  ``b`` comes
    from the slope ``b01`` between the first two rings: when the first
    three rings agree on a power (slopes within 0.1) more than 0.05 from the
    multiples of ``unit`` that power is used as is, otherwise ``b01`` is
    snapped to the nearest multiple of ``unit``.  With ``g = |f|^p`` and
    ``unit = p`` a smooth ``f`` is frozen at its ring value, while moving
    a whole power of ``|z|`` between ``f`` and the weight leaves the
    result unchanged.  A total exponent ``<= -2`` gives inf only for a
    clearly singular power (``b < -1/2``); otherwise ``g`` is frozen.
    """
    lead = g.shape[:-1]
    vals = g[..., : fac.n_nodes]
    w = np.abs(fac.nodes) ** wexp if wexp else np.ones(fac.n_nodes)
    total = np.sum(vals * w * fac.areas, axis=-1)
    if fac.kind == "polar" and fac.domain.is_origin_centered:
        nr, nt = fac.shape
        G = vals.reshape(lead + (nr, nt))
        g0, g1, g2 = G[..., 0, :], G[..., 1, :], G[..., 2, :]
        r0, r1, r2 = fac.radii[:3]
        h = fac.domain.radius / nr
        dth = 2 * np.pi / nt
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            b01 = np.log(g1 / g0) / np.log(r1 / r0)
            b12 = np.log(g2 / g1) / np.log(r2 / r1)
            b01 = np.where(np.isfinite(b01), b01, 0.0)
            consistent = np.abs(b01 - b12) <= 0.1
            snapped = unit * np.round(b01 / unit)
            b = np.where(consistent & (np.abs(b01 - snapped) > 0.05), b01, snapped)
            singular = (b < -0.5) & consistent
            b = np.where((wexp + b <= -2) & ~singular, 0.0, b)
            beta = wexp + b
            inner = np.where(beta > -2, g0 * r0 ** (-b) * h ** (beta + 2) / (beta + 2), np.inf)
        inner = np.where(g0 > 0, inner, 0.0) * dth
        total = total - np.sum(g0 * w[0] * fac.areas[0], axis=-1) + np.sum(inner, axis=-1)
    return total


def weighted_lp_norm(f, p, s, grid, *, diverging: bool = False) -> WeightedNorm:
    """``|| |z|^{-s} f ||_{L^p}`` on one grid.

    Parameters
    ----------
    f : array or callable
        Samples with shape ``grid.shape`` (only interior nodes are used),
        or a callable of the coordinates.
    p : LebesgueExponent, number or "inf"
    s : number or sequence, one weight per factor
    grid : FactorGrid or ProductGrid
    """
    P = _as_product(grid)
    p = as_exponent(p)
    s_vec = np.broadcast_to(np.asarray([float(as_rational(x)) for x in np.atleast_1d(s)]), (P.n,))
    if callable(f):
        vals = np.broadcast_to(np.asarray(f(*P.coordinates()), complex), P.shape)
    else:
        vals = np.asarray(f)
        if vals.shape != P.shape and vals.shape == P.node_shape:
            pad = [(0, fac.n_boundary) for fac in P.factors]
            vals = np.pad(vals, pad)
    sl = P.node_slices()
    a = np.abs(vals[sl]).astype(float)
    if p.is_inf:
        for e, fac in enumerate(P.factors, start=1):
            if s_vec[e - 1]:
                shape = [1] * P.n
                shape[e - 1] = -1
                a = a * np.abs(fac.nodes).reshape(shape) ** (-s_vec[e - 1])
        return WeightedNorm(float(np.max(a)) if a.size else 0.0, diverging)
    pv = float(p.value)
    g = a ** pv
    for e in range(P.n, 0, -1):
        g = _reduce_factor(g, P.factors[e - 1], -pv * s_vec[e - 1], pv)
    val = float(g) ** (1.0 / pv)
    return WeightedNorm(val, diverging or not np.isfinite(val))


def detect_divergence(values: Sequence[float], ratio: float = 0.9, consecutive: int = 3) -> bool:
    """Flag divergence of a monotone refinement sequence.

    Any infinite value is divergence.  Otherwise the increments
    ``d_j = v_{j+1} - v_j`` are compared: the sequence is flagged when
    ``d_{j+1} / d_j >= ratio`` for ``consecutive`` successive steps
    (increments that do not shrink geometrically).  Zero increments count
    as converged.
    """
    v = np.asarray(values, float)
    if np.any(~np.isfinite(v)):
        return True
    d = np.diff(v)
    run = 0
    for a, b in zip(d[:-1], d[1:]):
        if a > 0 and b / a >= ratio:
            run += 1
            if run >= consecutive:
                return True
        elif a <= 0 and b > 0:
            run += 1
            if run >= consecutive:
                return True
        else:
            run = 0
    return False


def weighted_lp_norm_sweep(f: Callable, D, p, s, resolutions=(16, 32, 64, 128, 256)) -> List[WeightedNorm]:
    """Norms of ``f`` on a refinement sweep; the last entry carries the divergence flag.

    Growth by more than 25% per refinement over the last three steps, or
    non-shrinking increments, sets the flag.
    """
    vals = [weighted_lp_norm(f, p, s, build_grid(D, r)).value for r in resolutions]
    flag = detect_divergence(vals)
    if len(vals) >= 4 and all(np.isfinite(vals)):
        rel = [b / a - 1 if a > 0 else 0 for a, b in zip(vals[-4:-1], vals[-3:])]
        flag = flag or all(x > 0.25 for x in rel)
    out = [WeightedNorm(v, False) for v in vals]
    out[-1] = WeightedNorm(vals[-1], flag)
    return out


def weighted_norm_converges(f: Callable, D, p, s, resolutions=(32, 64, 128), rtol: float = 0.05) -> bool:
    """Finite and stable (relative change ``<= rtol``) under the last refinement."""
    vals = [weighted_lp_norm(f, p, s, build_grid(D, r)).value for r in resolutions]
    if not all(np.isfinite(vals)):
        return False
    a, b = vals[-2], vals[-1]
    return b == 0 or abs(b - a) <= rtol * abs(b)


# ---------------------------------------------------------------------------
# test families and operator norms

@dataclass
class TestFamily:
    """Seeded scalar test functions on one planar domain.

    Members are Gaussian bumps with random centres, widths and complex
    amplitudes plus monomials ``z^a conj(z)^b`` for ``a + b <= degree``.
    """

    n_bumps: int = 20
    degree: int = 2
    seed: int = 0
    include_zero: bool = False
    names: List[str] = field(default_factory=list, init=False)
    members: List[Callable] = field(default_factory=list, init=False)

    __test__ = False  # not a pytest class

    def __post_init__(self):
        rng = np.random.default_rng(self.seed)
        for i in range(self.n_bumps):
            c = 0.6 * np.sqrt(rng.random()) * np.exp(2j * np.pi * rng.random())
            sig = 0.1 + 0.3 * rng.random()
            amp = np.exp(2j * np.pi * rng.random())
            self.names.append(f"bump{i}")
            self.members.append(lambda z, c=c, sig=sig, amp=amp: amp * np.exp(-np.abs(z - c) ** 2 / sig**2))
        for a in range(self.degree + 1):
            for b in range(self.degree + 1 - a):
                self.names.append(f"mono_{a}_{b}")
                self.members.append(lambda z, a=a, b=b: z**a * np.conj(z) ** b + 0j)
        if self.include_zero:
            self.names.append("zero")
            self.members.append(lambda z: np.zeros_like(z, dtype=complex))

    def __iter__(self):
        return iter(zip(self.names, self.members))

    def __len__(self):
        return len(self.members)


def operator_norm_sample(family: TestFamily, p, s, *, mode: str = "full", epsilon=Fraction(1, 10),
                         D=None, resolution=64) -> dict:
    """Ratios ``||I_c f||_target / ||f||_source`` over a test family.

    ``mode="full"`` uses ``c = k(p, s)`` and target weight ``s + 1 - epsilon``;
    ``mode="modified"`` uses ``c = k~(p, s)`` and target weight ``s``.
    Zero members are skipped.  Returns a dict with ``rows`` (name, source,
    target, ratio) and ``max_ratio``.
    """
    p = as_exponent(p)
    s = as_rational(s)
    eps = as_rational(epsilon)
    D = D or Disc()
    if mode == "full":
        c, t = dbar_weight(p, s), s + 1 - eps
    elif mode == "modified":
        c, t = modified_dbar_weight(p, s), s
    else:
        raise ValueError("mode must be 'full' or 'modified'")
    fac = build_factor_grid(D, resolution)
    op = area_operator(fac, c)
    rows = []
    for name, f in family:
        vals = np.asarray(f(fac.samples), complex)
        src = weighted_lp_norm(vals, p, s, fac).value
        if src == 0:
            continue
        try:
            check_integrable(vals, fac, c)
        except NonIntegrableError:
            rows.append((name, src, np.inf, np.inf))
            continue
        out = op(vals[None, :])[0]
        tgt = weighted_lp_norm(out, p, t, fac).value
        rows.append((name, src, tgt, tgt / src))
    ratios = [r[3] for r in rows]
    return {"c": c, "target_s": t, "rows": rows, "max_ratio": max(ratios) if ratios else 0.0,
            "diverging": any(not np.isfinite(x) for x in ratios)}


# ---------------------------------------------------------------------------
# witness functions (radial profiles near the origin)

@dataclass(frozen=True)
class RadialProfile:
    """``|f(z)| = |z|^a |log|z||^{-b}`` near the origin."""

    a: float
    b: float = 0.0
    label: str = ""

    def __call__(self, z):
        r = np.abs(z)
        return r**self.a * np.abs(np.log(r)) ** (-self.b)


def radial_norm_sweep(f: RadialProfile, p: LebesgueExponent, t: float, *, R0: float = 0.5,
                      levels: int = 6, base: float = 16.0) -> List[float]:
    """``|| |z|^{-t} f ||`` over ``r_j < |z| < R0`` for shrinking ``r_j``.

    In ``u = log(1/r)`` the radial integral of ``|f|^p r^{-tp} r dr`` is
    ``int exp(-c u) u^{-pb} du``; the cut-offs ``u_j = log(1/R0) + base^j``
    approach the origin doubly exponentially so that logarithmic
    divergences produce non-shrinking increments.  For finite ``p`` the
    ``p``-th powers are returned; for ``p = inf`` the running suprema.
    """
    u0 = np.log(1.0 / R0)
    cuts = [u0 + base**j for j in range(levels)]
    if p.is_inf:
        out = []
        for U in cuts:
            u = np.concatenate([np.linspace(u0, min(U, u0 + 50), 2001), np.geomspace(max(u0, 1e-3), U, 2001)])
            u = u[(u >= u0) & (u <= U)]
            with np.errstate(over="ignore"):
                val = np.exp((f.a - t) * (-u)) * u ** (-f.b)
            out.append(float(np.max(val)))
        return out
    pv = float(p.value)
    c = pv * (f.a - t) + 2.0
    pb = pv * f.b

    def integrand(u):
        with np.errstate(over="ignore"):
            return 2 * np.pi * np.exp(-c * u - pb * np.log(u))

    acc, out, lo = 0.0, [], u0
    for U in cuts:
        # split each piece geometrically so quad sees a smooth integrand
        edges = np.geomspace(lo, U, 12) if lo > 0 else np.linspace(lo, U, 12)
        for a, b in zip(edges[:-1], edges[1:]):
            if not np.isfinite(acc):
                break
            with np.errstate(over="ignore"):
                if -c * b - pb * np.log(b) > 700:
                    acc = np.inf
                    break
            val, _ = quad(integrand, a, b, limit=200, epsabs=0.0, epsrel=1e-10)
            acc += val
        out.append(acc)
        lo = U
    return out


@dataclass(frozen=True)
class WitnessCase:
    case: str
    function: str
    weight: str
    expected_member: bool
    values: tuple
    diverging: bool

    @property
    def member(self) -> bool:
        return not self.diverging

    @property
    def ok(self) -> bool:
        return self.member == self.expected_member


def witness_suite(p, s, epsilon=Fraction(1, 20)) -> List[WitnessCase]:
    """Membership checks for the witnesses that make ``k(p,s)`` maximal and ``k~(p,s)`` minimal.

    Cases
    -----
    * ``power`` or ``log``: the witness ``w`` lies in ``|z|^s L^p`` but not in
      ``|z|^{k+1} L^1``.  When ``k = 1 + s - 2/p`` exactly the witness is
      ``|z|^{s-2/p} / log|z|``, otherwise ``|z|^{s-2/p+eps}``.
    * ``inclusion``: the same witness lies in ``|z|^k L^1``.
    * ``modified``: ``z^{k~}`` lies in ``|z|^s L^p`` and ``z^{k~-1}`` does not.
    """
    p = as_exponent(p)
    s = as_rational(s)
    k = dbar_weight(p, s)
    kt = modified_dbar_weight(p, s)
    inv = Fraction(0) if p.is_inf else 1 / p.value
    base = s - 2 * inv
    one = LebesgueExponent(Fraction(1))
    if k == 1 + base:
        w = RadialProfile(float(base), 1.0, f"|z|^{base}/log|z|")
        kind = "log"
    else:
        gap = k - 1 - base
        eps = min(Fraction(epsilon), gap / 2)
        w = RadialProfile(float(base + eps), 0.0, f"|z|^{base + eps}")
        kind = "power"
    checks = [
        (f"{kind}-member", w, p, s, True),
        (f"{kind}-excluded", w, one, Fraction(k + 1), False),
        ("inclusion", w, one, Fraction(k), True),
        ("modified-member", RadialProfile(float(kt), 0.0, f"|z|^{kt}"), p, s, True),
        ("modified-excluded", RadialProfile(float(kt - 1), 0.0, f"|z|^{kt - 1}"), p, s, False),
    ]
    out = []
    for case, f, pp, tt, expected in checks:
        vals = radial_norm_sweep(f, pp, float(tt))
        out.append(WitnessCase(case, f.label, f"|z|^{tt} L^{pp}", expected, tuple(vals),
                               detect_divergence(vals)))
    return out
