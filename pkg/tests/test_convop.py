import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latticeinterp.basis import make_extended_hat, make_p1, make_q1
from latticeinterp.convop import (
    NonInvertibleBasisError,
    apply,
    build_operator,
    compute_stencil,
    inverse_kernel,
    smooth_nodal_interpolant,
    solve,
)
from latticeinterp.interp import InterpolantField, lp_norm_field
from latticeinterp.lattice import InvalidParameterError, LatticeDomain, LatticeFunction, lp_norm


def test_q1_stencil_1d():
    m = compute_stencil(make_q1(1))
    assert set(m) == {(-1,), (0,), (1,)}
    assert m[(0,)] == pytest.approx(2 / 3, abs=1e-15)
    assert m[(1,)] == pytest.approx(1 / 6, abs=1e-15)


@pytest.mark.parametrize("d", [2, 3])
def test_q1_stencil_is_tensor_power(d):
    m = compute_stencil(make_q1(d))
    one = {0: 2 / 3, 1: 1 / 6, -1: 1 / 6}
    for delta, val in m.items():
        assert val == pytest.approx(math.prod(one[i] for i in delta), abs=1e-15)
    assert sum(m.values()) == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("d", [2, 3])
def test_p1_stencil_sums_to_one_and_symmetric(d):
    m = compute_stencil(make_p1(d))
    assert sum(m.values()) == pytest.approx(1.0, abs=1e-14)
    for k, v in m.items():
        assert m[tuple(-i for i in k)] == v


def test_nyquist_mode():
    dom = LatticeDomain.cube(1, 8)
    op = build_operator(make_q1(1), dom)
    nyq = LatticeFunction.nyquist(dom)
    assert apply(op, nyq).allclose(nyq * (1 / 3), atol=1e-15)
    assert solve(op, nyq).allclose(nyq * 3.0, atol=1e-12)
    assert op.min_multiplier == pytest.approx(1 / 3, abs=1e-15)


def test_full_multiplier_matches_closed_form():
    dom = LatticeDomain.cube(1, 16)
    op = build_operator(make_q1(1), dom)
    k = np.arange(16)
    assert np.allclose(op.full_multiplier(), (2 + np.cos(2 * np.pi * k / 16)) / 3, atol=1e-14)


@pytest.mark.parametrize("basis", [make_q1(1), make_q1(2), make_p1(2), make_q1(3)], ids=["q1", "q1-2", "p1-2", "q1-3"])
def test_round_trip(basis):
    dom = LatticeDomain.cube(basis.dim, 8)
    op = build_operator(basis, dom)
    u = LatticeFunction.random(dom, np.random.default_rng(3), 2)
    assert solve(op, apply(op, u)).allclose(u, atol=1e-10)
    assert apply(op, solve(op, u)).allclose(u, atol=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_self_adjoint_and_coercive(seed):
    rng = np.random.default_rng(seed)
    dom = LatticeDomain.cube(2, 6)
    op = build_operator(make_q1(2), dom)
    u, w = LatticeFunction.random(dom, rng), LatticeFunction.random(dom, rng)
    assert np.sum(apply(op, u).values * w.values) == pytest.approx(np.sum(u.values * apply(op, w).values), abs=1e-12)
    # <Cu, u> >= min multiplier * ||u||^2
    assert np.sum(apply(op, u).values * u.values) >= op.min_multiplier * lp_norm(u, 2) ** 2 - 1e-12


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1.0, 2.0, math.inf]))
def test_solve_bounded_by_kernel_mass(seed, p):
    dom = LatticeDomain.cube(1, 16)
    op = build_operator(make_q1(1), dom)
    g = inverse_kernel(op, 10)
    f = LatticeFunction.random(dom, np.random.default_rng(seed))
    assert lp_norm(solve(op, f), p) <= g.l1_norm * lp_norm(f, p) * (1 + 1e-12)
    assert lp_norm(apply(op, f), p) <= lp_norm(f, p) * (1 + 1e-12)


def test_inverse_kernel_closed_form_and_identity():
    op = build_operator(make_q1(1), LatticeDomain.cube(1, 16))
    g = inverse_kernel(op, 12)
    r = math.sqrt(3) - 2
    for xi in range(-12, 13):
        assert g(xi) == pytest.approx(math.sqrt(3) * r ** abs(xi), abs=1e-12)
    assert g.l1_norm == pytest.approx(3.0, abs=1e-10)
    # (g * m)(xi) = delta
    for xi in range(-5, 6):
        conv = sum(val * g(xi - k[0]) for k, val in op.stencil.items())
        assert conv == pytest.approx(float(xi == 0), abs=1e-12)


def test_inverse_kernel_tail_decays_geometrically():
    op = build_operator(make_q1(2), LatticeDomain.cube(2, 8))
    tails = [inverse_kernel(op, r, box=64).tail_bound for r in (2, 4, 6, 8)]
    assert all(b < a for a, b in zip(tails, tails[1:]))
    assert tails[-1] < 1e-3 * tails[0]
    offsets, values = inverse_kernel(op, 2, box=64).as_array()
    assert offsets.shape == (25, 2) and values.shape == (25,)


def test_smooth_nodal_interpolant_interpolates():
    dom = LatticeDomain.cube(2, 8)
    u = LatticeFunction.random(dom, np.random.default_rng(7))
    f = smooth_nodal_interpolant(make_q1(2), u)
    sites = dom.sites().reshape(-1, 2).astype(float)
    assert np.max(np.abs(f(sites) - u.values.reshape(-1, 1))) <= 1e-10
    # the smooth interpolant is bounded by ||g||_1 ||u|| in every L^p
    g = inverse_kernel(build_operator(make_q1(2), dom), 8)
    assert lp_norm_field(f, 2).value <= g.l1_norm * lp_norm(u, 2)


def test_domain_too_small():
    with pytest.raises(InvalidParameterError):
        build_operator(make_extended_hat(), LatticeDomain.cube(1, 3))
    with pytest.raises(InvalidParameterError):
        build_operator(make_q1(2), LatticeDomain.cube(1, 8))


def test_extended_hat_not_invertible():
    dom = LatticeDomain.cube(1, 9)
    op = build_operator(make_extended_hat(), dom)
    assert not op.invertible
    assert abs(op.min_multiplier) <= 1e-14
    with pytest.raises(NonInvertibleBasisError):
        solve(op, LatticeFunction.delta(dom))
    with pytest.raises(NonInvertibleBasisError):
        inverse_kernel(op, 3)


def test_domain_mismatch():
    op = build_operator(make_q1(1), LatticeDomain.cube(1, 8))
    with pytest.raises(InvalidParameterError):
        apply(op, LatticeFunction.zeros(LatticeDomain.cube(1, 9)))
    with pytest.raises(InvalidParameterError):
        solve(op, LatticeFunction.zeros(LatticeDomain.cube(1, 9)))


def test_bar_and_tilde_share_the_operator():
    # the tilde field of u equals the bar field of C u at the sites
    dom = LatticeDomain.cube(1, 10)
    u = LatticeFunction.random(dom, np.random.default_rng(11))
    op = build_operator(make_q1(1), dom)
    sites = np.arange(10, dtype=float)[:, None]
    assert np.allclose(InterpolantField.tilde(u, make_q1(1))(sites), InterpolantField.bar(apply(op, u), make_q1(1))(sites))
