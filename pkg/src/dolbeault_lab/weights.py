"""Exact dbar-weights of a pair (p, s).

Everything here runs on :class:`fractions.Fraction` so that branch
conditions such as ``(s - k0) * p > 2`` are decided exactly.  The
exponent ``p = inf`` is a distinguished value, never a large float.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence, Tuple, Union

__all__ = [
    "INF",
    "LebesgueExponent",
    "as_exponent",
    "as_rational",
    "dbar_weight",
    "dbar_weight_decomposition",
    "modified_dbar_weight",
    "weight_gap",
    "gap_condition",
    "dbar_weight_multi",
    "modified_dbar_weight_multi",
    "brute_force_dbar_weight",
    "brute_force_modified_weight",
    "parse_rational_list",
]


@dataclass(frozen=True)
class LebesgueExponent:
    """An exponent ``1 <= p <= inf``; ``value is None`` encodes infinity."""

    value: Fraction | None

    def __post_init__(self):
        if self.value is not None and self.value < 1:
            raise ValueError(f"Lebesgue exponent must be >= 1, got {self.value}")

    @property
    def is_inf(self) -> bool:
        return self.value is None

    def two_over_p(self) -> Fraction:
        return Fraction(0) if self.value is None else Fraction(2) / self.value

    def __float__(self) -> float:
        return math.inf if self.value is None else float(self.value)

    def __str__(self) -> str:
        return "inf" if self.value is None else str(self.value)


INF = LebesgueExponent(None)

Number = Union[int, Fraction, str, float, LebesgueExponent]


def as_rational(x) -> Fraction:
    """Coerce ``x`` to an exact rational.

    Floats are accepted only when they are exactly representable as a short
    decimal (``0.5`` yes); strings like ``"3/4"`` or ``"0.25"`` are parsed
    exactly.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"cannot treat {x!r} as a rational weight")
        return Fraction(repr(float(x)))
    raise TypeError(f"cannot interpret {x!r} as an exact rational")


def as_exponent(p: Number) -> LebesgueExponent:
    if isinstance(p, LebesgueExponent):
        return p
    if isinstance(p, str) and p.strip().lower() in {"inf", "infinity", "oo"}:
        return INF
    if isinstance(p, float) and math.isinf(p):
        if p < 0:
            raise ValueError("p must be >= 1")
        return INF
    return LebesgueExponent(as_rational(p))


def _floor(x: Fraction) -> int:
    return x.numerator // x.denominator


def _ceil(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def dbar_weight(p: Number, s) -> int:
    """The dbar-weight ``k(p, s)``.

    For ``p != 1`` this is the largest integer strictly below
    ``2 + s - 2/p``; for ``p = 1`` the inequality is not strict.
    """
    p = as_exponent(p)
    s = as_rational(s)
    bound = 2 + s - p.two_over_p()
    if p.value == 1:
        return _floor(bound)
    return _ceil(bound) - 1


def dbar_weight_decomposition(p: Number, s) -> Tuple[int, int]:
    """Split ``k(p, s) = k0 + k1`` with ``k0 = floor(s)`` and ``k1`` in {0, 1, 2}."""
    p = as_exponent(p)
    s = as_rational(s)
    k0 = _floor(s)
    frac = s - k0
    if p.is_inf:
        k1 = 1 if frac == 0 else 2
    else:
        t = frac * p.value
        if t > 2:
            k1 = 2
        elif t > 2 - p.value:
            k1 = 1
        else:
            k1 = 0
    return k0, k1


def modified_dbar_weight(p: Number, s) -> int:
    """The modified weight: least ``k`` with ``(s - k) p < 2`` (``s - k <= 0`` at p = inf)."""
    p = as_exponent(p)
    s = as_rational(s)
    if p.is_inf:
        return _ceil(s)
    return _floor(s - p.two_over_p()) + 1


def weight_gap(p: Number, s) -> int:
    return dbar_weight(p, s) - modified_dbar_weight(p, s)


def gap_condition(p: Number, s) -> bool:
    """True when both weights coincide according to the closed-form criterion.

    The weights agree exactly when ``(s - floor(s)) p`` is ``2`` or ``2 - p``
    (finite ``p``).  At ``p = inf`` they never agree.
    """
    p = as_exponent(p)
    s = as_rational(s)
    if p.is_inf:
        return False
    t = (s - _floor(s)) * p.value
    return t == 2 or t == 2 - p.value


def _check_vector(s: Sequence) -> list:
    s = list(s)
    if len(s) < 1:
        raise ValueError("weight vector must have length n >= 1")
    return [as_rational(x) for x in s]


def dbar_weight_multi(p: Number, s: Iterable) -> Tuple[int, ...]:
    return tuple(dbar_weight(p, x) for x in _check_vector(s))


def modified_dbar_weight_multi(p: Number, s: Iterable) -> Tuple[int, ...]:
    return tuple(modified_dbar_weight(p, x) for x in _check_vector(s))


# Enumeration oracles.  [-10, 10] covers |s| <= 3 for every p >= 1.

def _dbar_inequality(p: LebesgueExponent, s: Fraction, m: int) -> bool:
    bound = 2 + s - p.two_over_p()
    return m <= bound if p.value == 1 else m < bound


def brute_force_dbar_weight(p: Number, s, lo: int = -10, hi: int = 10) -> int:
    p, s = as_exponent(p), as_rational(s)
    ok = [m for m in range(lo, hi + 1) if _dbar_inequality(p, s, m)]
    if not ok or ok[-1] == hi:
        raise ValueError("search window too small for this s")
    return max(ok)


def brute_force_modified_weight(p: Number, s, lo: int = -10, hi: int = 10) -> int:
    p, s = as_exponent(p), as_rational(s)
    if p.is_inf:
        ok = [k for k in range(lo, hi + 1) if s - k <= 0]
    else:
        ok = [k for k in range(lo, hi + 1) if (s - k) * p.value < 2]
    if not ok or ok[0] == lo:
        raise ValueError("search window too small for this s")
    return min(ok)


def parse_rational_list(text: str) -> list:
    return [as_rational(t) for t in text.split(",") if t.strip()]
