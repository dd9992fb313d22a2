"""Numerical weighted Dolbeault machinery on planar and product domains.

Modules
-------
weights    exact dbar-weights of a pair (p, s)
domain     planar domains, product domains and their grids
cauchy     weighted Cauchy area and boundary transforms
forms      (0,q)-forms on product grids and their dbar
homotopy   the dbar-homotopy operators on product domains
solver     the local weighted solution operator with cutoffs
analysis   weighted norms, operator-norm samples and witnesses
cli        the ``dolbeault-lab`` experiment runner
"""

from .weights import (INF, LebesgueExponent, as_exponent, dbar_weight, dbar_weight_decomposition,
                      gap_condition, modified_dbar_weight, weight_gap)
from .domain import Disc, ProductDomain, Rectangle, build_factor_grid, build_grid
from .cauchy import (kernel_integral_JR, weighted_cauchy_area, weighted_cauchy_boundary,
                     cauchy_pompeiu_residual)
from .forms import Form0q, dbar_numeric, dbar_weighted
from .library import named_form, named_function, symbolic_form
from .homotopy import S_q, T_q1, homotopy_residual
from .solver import SolveConfig, make_cutoffs, solve, verify_solution
from .analysis import TestFamily, operator_norm_sample, weighted_lp_norm, witness_suite
from .estimators import DbarSolver, WeightedCauchyTransform

__version__ = "0.1.0"

__all__ = [
    "INF", "LebesgueExponent", "as_exponent", "dbar_weight", "dbar_weight_decomposition",
    "gap_condition", "modified_dbar_weight", "weight_gap",
    "Disc", "ProductDomain", "Rectangle", "build_factor_grid", "build_grid",
    "kernel_integral_JR", "weighted_cauchy_area", "weighted_cauchy_boundary", "cauchy_pompeiu_residual",
    "Form0q", "dbar_numeric", "dbar_weighted",
    "named_form", "named_function", "symbolic_form",
    "S_q", "T_q1", "homotopy_residual",
    "SolveConfig", "make_cutoffs", "solve", "verify_solution",
    "TestFamily", "operator_norm_sample", "weighted_lp_norm", "witness_suite",
    "DbarSolver", "WeightedCauchyTransform",
]
