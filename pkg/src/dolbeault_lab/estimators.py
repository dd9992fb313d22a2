"""scikit-learn style wrappers around the transform and the solver.

The objects follow the estimator conventions (constructor arguments stored
verbatim, ``fit`` returns ``self``, fitted state ends in ``_``) so that
``get_params``/``set_params``/``clone`` work.  Inputs are not feature
matrices: a row of ``X`` is one scalar field sampled on the grid, and the
solver consumes forms.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_is_fitted, check_product_domain
from .cauchy import area_operator, check_integrable
from .domain import Disc, build_factor_grid
from .solver import SolveConfig, solve, verify_solution

__all__ = ["WeightedCauchyTransform", "DbarSolver"]


class WeightedCauchyTransform(TransformerMixin, BaseEstimator):
    """Apply ``I_k`` on one planar domain to batches of sampled fields.

    Parameters
    ----------
    domain : Disc or Rectangle, optional
        Defaults to the unit disc.
    k : int
        Weight exponent.
    resolution : int or (int, int)
    check : bool
        Test ``f / z^k`` for integrability before transforming.

    Attributes
    ----------
    grid_ : FactorGrid
    operator_ : area operator acting on rows of samples
    """

    def __init__(self, domain=None, k=0, resolution=(64, 128), check=True):
        self.domain = domain
        self.k = k
        self.resolution = resolution
        self.check = check

    def fit(self, X=None, y=None):
        D = self.domain if self.domain is not None else Disc()
        self.grid_ = build_factor_grid(D, self.resolution)
        self.operator_ = area_operator(self.grid_, int(self.k))
        self.n_features_in_ = self.grid_.n_samples
        return self

    def _rows(self, X):
        check_is_fitted(self, "grid_")
        if callable(X):
            X = X(self.grid_.samples)
        X = np.asarray(X, complex)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} samples per row, got {X.shape[1]}")
        return X

    def transform(self, X):
        """``I_k`` of every row; ``X`` may also be a callable on the grid samples."""
        X = self._rows(X)
        if self.check:
            for row in X:
                check_integrable(row, self.grid_, int(self.k))
        return self.operator_(X)

    def sample(self, f):
        """Sample a callable at the fitted grid's samples (one row)."""
        check_is_fitted(self, "grid_")
        return np.asarray(f(self.grid_.samples), complex)[None, :]


class DbarSolver(BaseEstimator):
    """Local solution operator for ``dbar_c eta = omega`` on ``Q``.

    ``fit`` fixes the configuration and the grid; ``transform`` solves for
    a closed form and ``score`` returns minus the residual on ``Q``.

    Parameters
    ----------
    P, Q : ProductDomain (or a single Disc/Rectangle when n = 1)
    p, s, mode, epsilon, resolution, margins, n_jobs
        As in :class:`SolveConfig`.
    """

    def __init__(self, P=None, Q=None, p=2, s=(0,), mode="full", epsilon="1/10",
                 resolution=64, margins=(0.05, 0.05), n_jobs=1):
        self.P = P
        self.Q = Q
        self.p = p
        self.s = s
        self.mode = mode
        self.epsilon = epsilon
        self.resolution = resolution
        self.margins = margins
        self.n_jobs = n_jobs

    def fit(self, X=None, y=None):
        P = check_product_domain(self.P if self.P is not None else Disc(), "P")
        Q = check_product_domain(self.Q if self.Q is not None else Disc(0j, 0.5), "Q")
        self.config_ = SolveConfig(P, Q, p=self.p, s=self.s, mode=self.mode, epsilon=self.epsilon,
                                   resolution=self.resolution, margins=tuple(self.margins),
                                   n_jobs=self.n_jobs)
        self.grid_ = self.config_.grid()
        return self

    def solve(self, omega):
        """Return ``(eta, trace)``."""
        check_is_fitted(self, "config_")
        return solve(omega, self.config_, grid=self.grid_)

    def transform(self, omega):
        return self.solve(omega)[0]

    def report(self, omega) -> dict:
        eta, trace = self.solve(omega)
        return verify_solution(eta, omega, self.config_, trace)

    def score(self, omega, y=None) -> float:
        eta, _ = self.solve(omega)
        return -verify_solution(eta, omega, self.config_)["residual_on_Q"]
