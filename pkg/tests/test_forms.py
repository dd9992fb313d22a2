import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dolbeault_lab.domain import Disc, ProductDomain, Rectangle, build_grid
from dolbeault_lab.forms import (Form0q, dbar_numeric, dbar_weighted, form_to_csv, gamma_class,
                                 kernel_membership_q0, split_e, wedge_sign)
from dolbeault_lab.library import named_form, symbolic_form

D2 = ProductDomain((Disc(), Disc()))


@pytest.fixture(scope="module")
def g2():
    return build_grid(D2, 32)


@pytest.fixture(scope="module")
def g3():
    return build_grid(ProductDomain((Disc(),) * 3), 16)


def _ones(grid):
    return np.ones(grid.shape, complex)


def test_split_examples(g2):
    a = _ones(g2)
    w = Form0q(g2, 2, {(1, 2): a})
    we, wp = split_e(w, 1)
    assert we.nonzero_indices() == [(1, 2)] and wp.is_zero()
    w = Form0q(g2, 1, {(2,): a})
    we, wp = split_e(w, 1)
    assert we.is_zero() and wp.nonzero_indices() == [(2,)]
    w = Form0q(g2, 1, {(1,): a, (2,): 2 * a})
    we, wp = split_e(w, 2)
    assert we.nonzero_indices() == [(2,)] and wp.nonzero_indices() == [(1,)]


def test_split_reconstructs(g3):
    w = Form0q.from_symbolic(symbolic_form(3, 2, {(1, 2): "zb3", (1, 3): "z1*zb2", (2, 3): "1"}), g3)
    for e in (1, 2, 3):
        we, wp = split_e(w, e)
        assert (we + wp - w).is_zero()


def test_gamma_examples(g3):
    a = _ones(g3)
    assert gamma_class(Form0q(g3, 1, {(1,): a}), None, 1)
    assert not gamma_class(Form0q(g3, 1, {(3,): a}), None, 2)
    assert gamma_class(Form0q.zeros(g3, 2), None, 1)


def test_wedge_sign():
    assert wedge_sign(1, (1, 2)) == 1
    assert wedge_sign(2, (1, 2)) == -1
    assert wedge_sign(3, (1, 2, 3)) == 1


def test_invalid_multi_index(g2):
    with pytest.raises(ValueError):
        Form0q(g2, 1, {(3,): 1.0})
    with pytest.raises(ValueError):
        Form0q(g2, 2, {(2, 1): 1.0})


def test_dbar_of_conj_function(g2):
    w = Form0q.from_symbolic(symbolic_form(2, 0, {(): "zb1"}), g2)
    d = dbar_numeric(w)
    m = g2.interior_mask(2)
    assert np.max(np.abs(d.component((1,))[m] - 1)) < 1e-6
    assert np.max(np.abs(d.component((2,))[m])) < 1e-6


def test_dbar_of_closed_form(g2):
    d = dbar_numeric(Form0q.from_symbolic(named_form("conjz2_dz1_plus_conjz1_dz2"), g2))
    assert d.sup_norm(g2.interior_mask(2)) < 1e-6


def test_dbar_of_holomorphic(g2):
    d = dbar_numeric(Form0q.from_symbolic(named_form("fn_z1z2"), g2))
    assert d.sup_norm(g2.interior_mask(2)) < 1e-6


def test_dbar_matches_symbolic_on_rectangles():
    g = build_grid(ProductDomain((Rectangle(-1 - 1j, 1 + 1j), Disc())), [32, 32])
    form = named_form("mixed_dz1_plus_dz2")
    num = dbar_numeric(Form0q.from_symbolic(form, g))
    ref = Form0q.from_symbolic(form.dbar(), g)
    assert (num - ref).sup_norm(g.interior_mask(2)) < 1e-4


def test_dbar_squared_vanishes():
    g = build_grid(D2, 64)
    w = Form0q.from_symbolic(symbolic_form(2, 0, {(): "zb1**2*zb2 + z1*zb2**3"}), g)
    assert dbar_numeric(dbar_numeric(w)).sup_norm(g.interior_mask(4)) < 1e-5


def test_dbar_squared_vanishes_n3(g3):
    w = Form0q.from_symbolic(symbolic_form(3, 1, {(1,): "zb2*zb3", (3,): "zb1**2"}), g3)
    assert dbar_numeric(dbar_numeric(w)).sup_norm(g3.interior_mask(2)) < 1e-5


def test_weighted_zero_weight_is_unweighted(g2):
    w = Form0q.from_symbolic(named_form("mixed_dz1_plus_dz2"), g2)
    a, b = dbar_weighted(w, [0, 0]), dbar_numeric(w)
    for J in a.indices():
        np.testing.assert_array_equal(a.component(J), b.component(J))


def test_weighted_kills_weighted_holomorphic():
    g = build_grid(D2, 32)
    w = Form0q.from_symbolic(symbolic_form(2, 0, {(): "z1*exp(z1 + z2)"}), g)
    assert dbar_weighted(w, [1, 0]).sup_norm(g.interior_mask(2)) < 1e-5


def test_weighted_two_paths_agree(g2):
    w = Form0q.from_symbolic(named_form("mixed_dz1_plus_dz2"), g2)
    m = g2.interior_mask(2)
    # both paths carry the same truncation error of the smooth part
    assert (dbar_weighted(w, [1, 1]) - dbar_numeric(w)).sup_norm(m) < 1e-6 * 10**3
    g1 = build_grid(Disc(), 64)
    f = Form0q.from_symbolic(symbolic_form(1, 0, {(): "zb1"}), g1)
    d = dbar_weighted(f, [1])
    assert np.max(np.abs(d.component((1,))[g1.interior_mask(2)] - 1)) < 1e-6
    assert dbar_weighted(Form0q.zeros(g1, 0), [1]).is_zero()


def test_kernel_membership():
    assert kernel_membership_q0(lambda z: z * np.exp(z), Disc(), 2, "1/2")
    # z^{k-1} = 1: not of the form z^k h with h holomorphic
    assert not kernel_membership_q0(lambda z: np.ones_like(z), Disc(), 2, "1/2")
    assert kernel_membership_q0(lambda z: 0 * z, Disc(), 2, "1/2")
    with pytest.raises(ValueError):
        kernel_membership_q0(lambda z: np.conj(z), Disc(), 2, "1/2")


def test_csv_dump(g2):
    w = Form0q.from_symbolic(named_form("conjz2_dz1_plus_conjz1_dz2"), g2)
    text = form_to_csv(w)
    lines = text.splitlines()
    assert lines[0] == "node_index,J,re,im"
    assert len(lines) == 1 + 2 * g2.n_nodes
    buf = io.StringIO()
    form_to_csv(w, buf)
    assert buf.getvalue() == text


@settings(max_examples=15, deadline=None)
@given(st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False))
def test_dbar_linear(c):
    g = build_grid(Disc(), 16)
    a = Form0q.from_symbolic(symbolic_form(1, 0, {(): "zb1*z1**2"}), g)
    b = Form0q.from_symbolic(symbolic_form(1, 0, {(): "exp(zb1)"}), g)
    lhs = dbar_numeric(a * c + b)
    rhs = dbar_numeric(a) * c + dbar_numeric(b)
    assert (lhs - rhs).sup_norm() <= 1e-12 * (1 + abs(c)) * 100
