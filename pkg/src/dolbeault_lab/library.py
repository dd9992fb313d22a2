"""Named symbolic test functions and test forms.

Coefficients are sympy expressions in ``z1..z3`` and the independent
conjugate symbols ``zb1..zb3``; ``d/d zb_j`` is then the exact
Cauchy-Riemann derivative.  Expressions are compiled with
:func:`sympy.lambdify` and evaluated with ``zb_j = conj(z_j)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Tuple

import numpy as np
import sympy as sp

__all__ = ["Z", "ZB", "SymbolicForm", "named_form", "named_function", "FORMS", "FUNCTIONS",
           "symbolic_form"]

Z = sp.symbols("z1 z2 z3")
ZB = sp.symbols("zb1 zb2 zb3")
_LOCALS = {str(s): s for s in Z + ZB}
_LOCALS.update({"exp": sp.exp, "cos": sp.cos, "sin": sp.sin, "I": sp.I, "pi": sp.pi})

MultiIndex = Tuple[int, ...]


def _sign(e: int, K: MultiIndex) -> int:
    """``dz_K = sign * dz_e ^ dz_{K \\ e}`` for ``e`` in the increasing index ``K``."""
    return -1 if sum(1 for k in K if k < e) % 2 else 1


@dataclass(frozen=True)
class SymbolicForm:
    """A (0,q)-form with symbolic coefficients, keyed by increasing 1-based indices."""

    n: int
    q: int
    coeffs: Dict[MultiIndex, sp.Expr]

    def __post_init__(self):
        for J in self.coeffs:
            if len(J) != self.q or list(J) != sorted(set(J)) or not all(1 <= j <= self.n for j in J):
                raise ValueError(f"bad multi-index {J} for a (0,{self.q})-form in n={self.n}")

    def dbar(self) -> "SymbolicForm":
        out: Dict[MultiIndex, sp.Expr] = {}
        for J, a in self.coeffs.items():
            for j in range(1, self.n + 1):
                if j in J:
                    continue
                K = tuple(sorted(J + (j,)))
                out[K] = out.get(K, 0) + _sign(j, K) * sp.diff(a, ZB[j - 1])
        out = {K: sp.simplify(v) for K, v in out.items()}
        return SymbolicForm(self.n, self.q + 1, {K: v for K, v in out.items() if v != 0})

    def is_closed(self) -> bool:
        return not self.dbar().coeffs

    def functions(self) -> Dict[MultiIndex, Callable]:
        """Numeric callables ``f(z1, ..., zn)`` for each coefficient."""
        args = list(Z[: self.n]) + list(ZB[: self.n])
        out = {}
        for J, expr in self.coeffs.items():
            lam = sp.lambdify(args, expr, "numpy")

            def f(*z, _lam=lam):
                zs = [np.asarray(x, complex) for x in z]
                val = _lam(*zs, *[np.conj(x) for x in zs])
                shape = np.broadcast_shapes(*[x.shape for x in zs])
                return np.broadcast_to(np.asarray(val, complex), shape)

            out[J] = f
        return out


def symbolic_form(n: int, q: int, coeffs: Dict[MultiIndex, str]) -> SymbolicForm:
    return SymbolicForm(n, q, {tuple(J): sp.sympify(expr, locals=_LOCALS) for J, expr in coeffs.items()})


# name -> (minimal n, q, coefficients)
FORMS: Dict[str, Tuple[int, int, Dict[MultiIndex, str]]] = {
    "zero": (1, 1, {}),
    "dz1": (1, 1, {(1,): "1"}),
    "conjz1_dz1": (1, 1, {(1,): "zb1"}),
    "conjz2_dz1": (2, 1, {(1,): "zb2"}),
    "conjz2_dz1_plus_conjz1_dz2": (2, 1, {(1,): "zb2", (2,): "zb1"}),
    "dz1_dz2": (2, 2, {(1, 2): "1"}),
    "conjz3_dz1_dz2": (3, 2, {(1, 2): "zb3"}),
    "mixed_dz1_plus_dz2": (2, 1, {(1,): "exp(z2)*zb1*zb2", (2,): "z1*zb2**2/2 + zb1"}),
    "fn_conjz1": (1, 0, {(): "zb1"}),
    "fn_z1z2": (2, 0, {(): "z1*z2"}),
}

FUNCTIONS: Dict[str, str] = {
    "one": "1",
    "conjz": "zb1",
    "abs2": "z1*zb1",
    "z2": "z1**2",
    "exp_conj": "exp(zb1)*z1 + cos(z1*zb1)",
}


def named_form(name: str, n: int | None = None, q: int | None = None) -> SymbolicForm:
    """Look up a registry form, embedded in dimension ``n`` (default: its minimal n)."""
    if name not in FORMS:
        raise KeyError(f"unknown test form {name!r}; known: {sorted(FORMS)}")
    n0, q0, coeffs = FORMS[name]
    n = n0 if n is None else n
    if n < n0:
        raise ValueError(f"form {name!r} needs n >= {n0}")
    if name == "zero" and q is not None:
        q0 = q
    return symbolic_form(n, q0, coeffs)


def named_function(name: str) -> Tuple[Callable, Callable]:
    """``(f, df/d zbar)`` numeric callables of one variable."""
    if name not in FUNCTIONS:
        raise KeyError(f"unknown test function {name!r}; known: {sorted(FUNCTIONS)}")
    form = symbolic_form(1, 0, {(): FUNCTIONS[name]})
    f = form.functions()[()]
    d = form.dbar().coeffs.get((1,), sp.Integer(0))
    df = SymbolicForm(1, 1, {(1,): d}).functions()[(1,)]
    return f, df
