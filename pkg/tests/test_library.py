import numpy as np
import pytest

from dolbeault_lab.library import FORMS, named_form, named_function, symbolic_form


@pytest.mark.parametrize("name", sorted(FORMS))
def test_registry_forms_build(name):
    w = named_form(name)
    assert w.q == FORMS[name][1]
    for f in w.functions().values():
        assert np.shape(f(*[np.array([0.1 + 0.2j, -0.3j])] * w.n)) == (2,)


def test_closed_forms():
    assert named_form("conjz2_dz1_plus_conjz1_dz2").is_closed()
    assert not named_form("conjz2_dz1").is_closed()
    assert named_form("dz1_dz2").is_closed()


def test_symbolic_dbar_sign():
    # dbar(zb1 dz2) = dz1 ^ dz2, dbar(zb2 dz1) = dz2 ^ dz1 = -dz1 ^ dz2
    assert symbolic_form(2, 1, {(2,): "zb1"}).dbar().coeffs == {(1, 2): 1}
    assert symbolic_form(2, 1, {(1,): "zb2"}).dbar().coeffs == {(1, 2): -1}


def test_embedding_and_errors():
    assert named_form("dz1", n=3).n == 3
    with pytest.raises(ValueError):
        named_form("dz1_dz2", n=1)
    with pytest.raises(KeyError):
        named_form("nope")
    with pytest.raises(KeyError):
        named_function("nope")


def test_named_function_derivative():
    f, df = named_function("abs2")
    z = np.array([0.3 + 0.4j])
    assert np.allclose(f(z), 0.25) and np.allclose(df(z), z)
