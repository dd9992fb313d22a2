import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dolbeault_lab.cauchy import (NonIntegrableError, area_operator, area_transform_reference,
                                  cauchy_pompeiu_residual, jr_bound_check, kernel_integral_JR,
                                  weighted_cauchy_area, weighted_cauchy_boundary)
from dolbeault_lab.domain import Disc, Rectangle, build_factor_grid
from dolbeault_lab.library import named_function


def one(w):
    return np.ones_like(w)


@pytest.fixture(scope="module")
def disc_grid():
    return build_factor_grid(Disc(), (64, 128))


def test_area_of_one_is_zbar(disc_grid):
    assert abs(weighted_cauchy_area(one, disc_grid, 0, 0.3) - 0.3) < 1e-10
    z = 0.3 + 0.4j
    assert abs(weighted_cauchy_area(one, disc_grid, 1, z) - z.conjugate()) < 1e-10


def test_zero_input(disc_grid):
    for k in range(3):
        assert weighted_cauchy_area(lambda w: 0 * w, disc_grid, k, 0.2j) == 0


def test_dbar_inversion_by_differences():
    g = build_factor_grid(Disc(), (128, 256))
    z, h = 0.2 + 0.1j, 1e-3
    pts = np.array([z + h, z - h, z + 1j * h, z - 1j * h])
    v = weighted_cauchy_area(one, g, 0, pts)
    dbar = 0.5 * ((v[0] - v[1]) / (2 * h) + 1j * (v[2] - v[3]) / (2 * h))
    assert abs(dbar - 1) < 1e-2


def test_rejects_outside_target(disc_grid):
    with pytest.raises(ValueError):
        weighted_cauchy_area(one, disc_grid, 0, 1.2)


def test_rejects_non_integrable(disc_grid):
    with pytest.raises(NonIntegrableError):
        weighted_cauchy_area(one, disc_grid, 2, 0.3)


@pytest.mark.parametrize("name", ["conjz", "abs2", "exp_conj"])
@pytest.mark.parametrize("k", [0, 1])
def test_against_reference(name, k, disc_grid):
    u, du = named_function(name)
    z = np.array([0.1 + 0.05j, -0.4j, 0.55 + 0.3j, -0.7])
    ref = area_transform_reference(u, du, Disc(), k, z)
    assert np.max(np.abs(weighted_cauchy_area(du, disc_grid, k, z) - ref)) < 2e-4


def test_second_order_convergence():
    u, du = named_function("exp_conj")
    rng = np.random.default_rng(3)
    z = 0.8 * np.sqrt(rng.random(20)) * np.exp(2j * np.pi * rng.random(20))
    ref = area_transform_reference(u, du, Disc(), 0, z)
    errs = [np.max(np.abs(weighted_cauchy_area(du, build_factor_grid(Disc(), (m, 2 * m)), 0, z) - ref))
            for m in (8, 16, 32, 64)]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 1.0)


def test_rectangle_cauchy_pompeiu():
    R = Rectangle(-1 - 1j, 1 + 0.5j)
    g = build_factor_grid(R, 32)
    z = np.array([0.1 + 0.2j, -0.5 - 0.3j, 0.7])
    area = weighted_cauchy_area(one, g, 0, z)
    bdry = weighted_cauchy_boundary(np.conj, R, 0, z, m_b=8192).value
    assert np.max(np.abs(area + bdry - np.conj(z))) < 1e-6


def test_weight_consistency(disc_grid):
    # I_k f = z^k I_0(w^{-k} f) through two different quadrature paths
    u, du = named_function("abs2")
    z = np.array([0.3 + 0.1j, -0.2 + 0.5j])
    direct = weighted_cauchy_area(du, disc_grid, 1, z)
    via0 = z * weighted_cauchy_area(lambda w: du(w) / w, disc_grid, 0, z)
    assert np.max(np.abs(direct - via0)) < 1e-12


@pytest.mark.parametrize("f", [one, np.conj, np.abs])
def test_weight_vanishing_rate(f, disc_grid):
    z = np.array([0.2, 0.1, 0.05]) * np.exp(0.3j)
    v = np.abs(weighted_cauchy_area(f, disc_grid, 1, z))
    ratio = v / np.abs(z)
    assert np.all(ratio < 2 * ratio[0] + 1e-12)


@settings(max_examples=20, deadline=None)
@given(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False))
def test_linearity(a, b):
    g = build_factor_grid(Disc(), (16, 32))
    op = area_operator(g, 1)
    f1 = np.abs(g.samples) + 0j
    f2 = np.exp(np.conj(g.samples))
    lhs = op((a * f1 + b * f2)[None])[0]
    rhs = a * op(f1[None])[0] + b * op(f2[None])[0]
    m = slice(0, g.n_nodes)
    assert np.max(np.abs(lhs[m] - rhs[m])) <= 1e-12 * (1 + abs(a) + abs(b))


def test_boundary_examples():
    assert abs(weighted_cauchy_boundary(one, Disc(), 0, 0.5).value - 1) < 1e-12
    # zbar = 1/w on the circle: the residues at 0 and z cancel
    assert abs(weighted_cauchy_boundary(np.conj, Disc(), 0, 0.5, m_b=2048).value) < 1e-12
    # z (1/2 pi i) \oint dw / (w (w - z)) = z (1/z - 1/z) = 0
    assert abs(weighted_cauchy_boundary(one, Disc(), 1, 0.5, m_b=2048).value) < 1e-12


def test_boundary_flags_close_targets():
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        out = weighted_cauchy_boundary(one, Disc(), 0, np.array([0.0, 0.99]), m_b=64)
    assert out.too_close.tolist() == [False, True]
    assert any(issubclass(w.category, RuntimeWarning) for w in rec)
    with pytest.raises(ValueError):
        weighted_cauchy_boundary(one, Disc(), 0, 1.5)


def test_cauchy_pompeiu_conj():
    r, _, _ = cauchy_pompeiu_residual(np.conj, lambda w: np.ones_like(w), Disc(), 0.4j,
                                      resolution=(256, 1024), m_b=1024)
    assert r < 1e-3


def test_cauchy_pompeiu_holomorphic():
    r, area, bdry = cauchy_pompeiu_residual(lambda w: w**2, lambda w: 0 * w, Disc(), 0.3 + 0.2j)
    assert abs(area) == 0 and abs(bdry - (0.3 + 0.2j) ** 2) < 1e-12


def test_cauchy_pompeiu_converges():
    u, du = named_function("exp_conj")
    z = np.array([0.35 + 0.2j, -0.1 - 0.5j])
    errs = [np.max(cauchy_pompeiu_residual(u, du, Disc(), z, resolution=(m, 2 * m))[0])
            for m in (16, 32, 64)]
    assert errs[2] < errs[1] < errs[0]
    assert np.log2(errs[1] / errs[2]) >= 1


def test_jr_area_of_disc():
    assert abs(kernel_integral_JR(1.0, 0, 0, 0.3) - np.pi) < 1e-6


def test_jr_matches_brute_quadrature():
    from scipy.integrate import dblquad
    z = 0.4
    f = lambda th, r: r ** (1 - 0.5) / abs(r * np.exp(1j * th) - z) ** 0.5  # noqa: E731
    ref, _ = dblquad(f, 0, 1, 0, 2 * np.pi, epsabs=1e-10)
    assert abs(kernel_integral_JR(1.0, 0.5, 0.5, z) - ref) < 1e-5 * ref


@pytest.mark.parametrize("alpha, beta", [(1, 1), (1.5, 1), (0.5, 0.5)])
def test_jr_bound_branches(alpha, beta):
    chk = jr_bound_check(alpha, beta)
    assert len(chk.rows) == 7
    assert chk.ok, chk.rows


def test_jr_parameter_checks():
    with pytest.raises(ValueError):
        kernel_integral_JR(1.0, 2.0, 0.0, 0.5)
    with pytest.raises(ValueError):
        kernel_integral_JR(1.0, 1.0, 1.0, 0.0)
