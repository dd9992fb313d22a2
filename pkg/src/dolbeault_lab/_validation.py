"""Small argument checks shared by the estimators and the command line."""

from __future__ import annotations

from sklearn.exceptions import NotFittedError

from .domain import Disc, ProductDomain, Rectangle


def check_product_domain(P, name: str = "P") -> ProductDomain:
    if isinstance(P, (Disc, Rectangle)):
        return ProductDomain((P,))
    if not isinstance(P, ProductDomain):
        raise TypeError(f"{name} must be a Disc, Rectangle or ProductDomain, got {type(P).__name__}")
    return P


def check_resolutions(resolutions) -> list:
    """A non-empty, strictly increasing list of resolutions."""
    res = list(resolutions)
    if not res:
        raise ValueError("resolution sweep is empty")
    key = [r if isinstance(r, int) else tuple(r)[0] for r in res]
    if any(b <= a for a, b in zip(key, key[1:])):
        raise ValueError(f"resolutions must be strictly increasing, got {res}")
    return res


def check_is_fitted(est, attr: str):
    if not hasattr(est, attr):
        raise NotFittedError(f"{type(est).__name__} is not fitted yet; call fit first")
