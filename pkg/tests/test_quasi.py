import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latticeinterp.basis import make_p1, make_q1, smoothed
from latticeinterp.interp import InterpolantField
from latticeinterp.lattice import InvalidParameterError, LatticeDomain, LatticeFunction
from latticeinterp.quasi import (
    GRAM_CONDITION_LIMIT,
    Polynomial,
    QuasiInterpolant,
    apply_quasi,
    build_dual,
    cubic_preimage,
    monomials,
    reproduction_table,
    two_basis_difference_check,
)


@pytest.fixture(scope="module")
def dual1():
    return build_dual(make_q1(1))


@pytest.fixture(scope="module")
def quasi1(dual1):
    return QuasiInterpolant(dual1)


def test_polynomial_evaluation_and_derivatives():
    p = Polynomial({(3, 0): 1.0, (1, 1): -2.0, (0, 0): 0.5}, 2)
    x = np.array([[2.0, 3.0]])
    assert p(x)[0] == pytest.approx(8 - 12 + 0.5)
    assert np.allclose(p.derivative(x, 1)[0], [3 * 4 - 6, -4])
    assert np.allclose(p.derivative(x, 2)[0], [[12, -2], [-2, 0]])
    assert p.degree == 3
    assert (p + Polynomial.affine(1.0, [0.0, 1.0])).terms[(0, 1)] == 1.0


def test_monomials_count():
    assert len(monomials(2, 3)) == 10
    assert len(monomials(2, 3, total=False)) == 16
    assert len(monomials(3, 3)) == 20


def test_dual_1d_structure(dual1):
    assert len(dual1.index_set) == 7
    assert sorted(dual1.index_set[:, 0].tolist()) == list(range(-3, 4))
    G = dual1.gram
    assert np.allclose(G, G.T)
    assert np.all(np.linalg.eigvalsh(G) > 0)
    assert dual1.condition < GRAM_CONDITION_LIMIT
    for k in range(1, 4):
        assert dual1.coefficient([k]) == pytest.approx(dual1.coefficient([-k]), rel=1e-12)
    assert dual1.coefficient([9]) == 0.0


@pytest.mark.parametrize("d", [1, 2, 3])
def test_biorthogonality(d):
    dual = build_dual(make_q1(d))
    assert len(dual.index_set) == 7**d
    assert np.max(np.abs(dual.biorthogonality_residuals(5 if d == 3 else 6))) <= 1e-10


def test_dual_vanishes_outside_reference_cell(dual1):
    x = np.array([[-2.5], [2.0001], [3.0]])
    assert np.all(dual1(x) == 0.0)
    assert dual1.lp_norm(1) > 0 and math.isfinite(dual1.lp_norm(math.inf))


def test_dual_rejects_p1():
    with pytest.raises(InvalidParameterError):
        build_dual(make_p1(2))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_projector_property(seed):
    # J applied to a tilde field returns its coefficients
    dual = build_dual(make_q1(1))
    q = QuasiInterpolant(dual)
    dom = LatticeDomain.cube(1, 12)
    w = LatticeFunction.random(dom, np.random.default_rng(seed))
    f = InterpolantField.tilde(w, make_q1(1))
    c = q.coefficients(f, dom.sites().reshape(-1, 1))
    assert np.max(np.abs(c - w.values)) <= 1e-10


def test_projector_property_2d():
    q = QuasiInterpolant(build_dual(make_q1(2)))
    dom = LatticeDomain.cube(2, 8)
    w = LatticeFunction.random(dom, np.random.default_rng(0))
    f = InterpolantField.tilde(w, make_q1(2))
    c = q.coefficients(f, dom.sites().reshape(-1, 2))
    assert np.max(np.abs(c - w.values.reshape(-1, 1))) <= 1e-10


def test_locality(quasi1):
    # c(xi) depends on v only through xi + (-2, 2)
    def v1(x):
        return np.sin(x[:, 0])

    def v2(x):
        return np.where(np.abs(x[:, 0] - 5.0) < 2.0, np.sin(x[:, 0]), 100.0 + x[:, 0] ** 2)

    assert quasi1.coefficients(v1, [[5.0]]) == pytest.approx(quasi1.coefficients(v2, [[5.0]]), abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_boundedness(seed):
    dual = build_dual(make_q1(1))
    q = QuasiInterpolant(dual)
    a = np.random.default_rng(seed).normal(size=4)

    def v(x):
        return a[0] * np.sin(a[1] * x[:, 0]) + a[2] * np.cos(a[3] * x[:, 0] ** 2)

    c = q.coefficients(v, np.arange(8.0)[:, None])
    sup = abs(a[0]) + abs(a[2])
    assert np.max(np.abs(c)) <= dual.lp_norm(1) * sup * (1 + 1e-9)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_cubic_reproduction(d):
    q = QuasiInterpolant(build_dual(make_q1(d)))
    rows = reproduction_table(q, 3)
    assert len(rows) == len(monomials(d, 3))
    assert max(r["residual"] for r in rows) <= 1e-9


def test_multicubic_reproduction_2d():
    q = QuasiInterpolant(build_dual(make_q1(2)))
    assert max(r["residual"] for r in reproduction_table(q, 3, total=False)) <= 1e-9


def test_quartic_not_reproduced(quasi1):
    rows = reproduction_table(quasi1, 4)
    assert [r["residual"] for r in rows if r["degree"] == 4][0] >= 1e-3


def test_apply_quasi_scaling(quasi1):
    # J of v(h .) reproduces cubic v at every h
    dom = LatticeDomain.cube(1, 16)
    h = 0.125
    f = apply_quasi(quasi1, lambda x: x[:, 0] ** 3 - x[:, 0], dom, h)
    x = np.linspace(3, 12, 40)[:, None]
    assert np.max(np.abs(f(x)[:, 0] - ((h * x[:, 0]) ** 3 - h * x[:, 0]))) <= 1e-12


@pytest.mark.parametrize(
    "exponents,expected",
    [((0,), lambda t: np.ones_like(t)), ((1,), lambda t: t), ((2,), lambda t: t**2 - 1 / 3), ((3,), lambda t: t**3 - t)],
)
def test_cubic_preimage_1d(exponents, expected):
    dom = LatticeDomain.cube(1, 16)
    p = Polynomial.monomial(exponents)
    w = cubic_preimage(p, make_q1(1), dom)
    t = np.arange(16.0)
    assert np.allclose(w.values[:, 0], expected(t), atol=1e-9)
    f = InterpolantField.tilde(w, make_q1(1))
    x = np.linspace(3, 12, 30)[:, None]
    assert np.max(np.abs(f(x)[:, 0] - p(x))) <= 1e-9


def test_cubic_preimage_2d():
    dom = LatticeDomain.cube(2, 12)
    p = Polynomial({(2, 1): 1.0, (0, 2): -0.5, (1, 0): 2.0}, 2)
    w = cubic_preimage(p, make_q1(2), dom)
    f = InterpolantField.tilde(w, make_q1(2))
    x = np.random.default_rng(0).uniform(3, 8, size=(40, 2))
    assert np.max(np.abs(f(x)[:, 0] - p(x))) <= 1e-9


def test_cubic_preimage_rejects_quartic():
    with pytest.raises(InvalidParameterError):
        cubic_preimage(Polynomial.monomial((4,)), make_q1(1), LatticeDomain.cube(1, 8))


def test_two_basis_difference_is_affine_for_cubics():
    res = two_basis_difference_check(make_q1(2), make_p1(2), Polynomial.monomial((3, 0)))
    assert res.residual <= 1e-9
    res = two_basis_difference_check(make_q1(2), make_p1(2), Polynomial({(1, 2): 1.0, (1, 1): 3.0}, 2))
    assert res.residual <= 1e-9


def test_two_basis_difference_not_affine_for_quartic():
    res = two_basis_difference_check(make_q1(2), make_p1(2), Polynomial.monomial((2, 2)))
    assert res.residual > 1e-6


def test_two_basis_same_basis_is_zero():
    sb = smoothed(make_q1(1))
    res = two_basis_difference_check(sb, sb, Polynomial.monomial((3,)))
    assert res.max_abs == 0.0
