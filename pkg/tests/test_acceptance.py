"""Acceptance checks. Each test prints one ``PASS``/``FAIL`` line; run with ``-s`` to see them."""

import math

import numpy as np
import pytest

from latticeinterp.basis import crisscross_partition, kuhn_partition, make_extended_hat, make_p1, make_q1, smoothed, verify_assumptions
from latticeinterp.convop import apply, build_operator, compute_stencil, smooth_nodal_interpolant, solve
from latticeinterp.lattice import LatticeDomain, LatticeFunction
from latticeinterp.quasi import Polynomial, QuasiInterpolant, build_dual, reproduction_table, two_basis_difference_check
from latticeinterp.studies import ConvergenceStudy, EquivalenceStudy, run_convergence, run_counterexample, run_equivalence

PS = (1.0, 2.0, 4.0, math.inf)


def _report(n: int, ok: bool, detail: str) -> None:
    print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def equivalence():
    """Q1 ensembles of 300 fields (and 600 for the stability check) in d = 1, 2."""
    return {d: run_equivalence(EquivalenceStudy(basis="q1", dim=d, ps=PS, samples=300, seed=0)) for d in (1, 2)}


def test_criterion_1_assumption_audit():
    good = [make_q1(1), make_q1(2), make_q1(3), make_p1(1), make_p1(2, crisscross_partition()), make_p1(2, kuhn_partition(2)), make_p1(3)]
    worst = 0.0
    ok = True
    for b in good:
        rep = verify_assumptions(b)
        ok &= all(rep[z].passed for z in ("Z1", "Z2", "Z3", "Z4"))
        worst = max(worst, *(rep[z].residual for z in ("Z2", "Z3", "Z4")))
    ext = verify_assumptions(make_extended_hat())
    ext_ok = all(ext[z].passed for z in ("Z1", "Z2", "Z3")) and not ext["Z4"].passed
    _report(
        1,
        ok and worst <= 1e-12 and ext_ok,
        f"Q1/P1 (7 bases) pass Z1-Z4, worst residual {worst:.2e}; extended hat Z1-Z3 pass, Z4 fails: {ext_ok}",
    )


def test_criterion_2_counterexample():
    rep = run_counterexample(extent=9, samples=1000)
    _report(2, rep.max_abs_exthat <= 1e-12 and rep.passed, f"max |u_bar| = {rep.max_abs_exthat:.2e} for u = (-1, 0, 1)")


def test_criterion_3_stencil_and_multiplier():
    m = compute_stencil(make_q1(1))
    err = max(abs(m[(-1,)] - 1 / 6), abs(m[(0,)] - 2 / 3), abs(m[(1,)] - 1 / 6))
    worst_rt, mins = 0.0, []
    rng = np.random.default_rng(0)
    for n in (16, 64, 256):
        dom = LatticeDomain.cube(1, n)
        op = build_operator(make_q1(1), dom)
        mins.append(op.min_multiplier)
        nyq_argmin = int(np.argmin(op.multiplier)) == n // 2
        for _ in range(10):
            u = LatticeFunction.random(dom, rng)
            worst_rt = max(worst_rt, float(np.max(np.abs(solve(op, apply(op, u)).values - u.values))))
    min_err = max(abs(v - 1 / 3) for v in mins)
    ok = err <= 1e-12 and min_err <= 1e-12 and nyq_argmin and worst_rt <= 1e-10
    _report(3, ok, f"stencil error {err:.1e}, min multiplier error {min_err:.1e} at Nyquist, round trip {worst_rt:.1e}")


def test_criterion_4_norm_equivalence_chain(equivalence):
    violations = sum(
        v for rep in equivalence.values() for per_p in rep.violations.values() for k, v in per_p.items() if k != "til_grad<=bar_grad"
    )
    fields = min(rep.field_count for rep in equivalence.values())
    c0 = equivalence[1].constants["2"]["c0"]
    ok = violations == 0 and fields >= 300 and abs(c0 - 1 / 3) <= 1e-6
    _report(4, ok, f"{violations} upper-bound violations over {fields} fields, p in {{1,2,4,inf}}, d in {{1,2}}; l2 lower ratio {c0:.9f}")


def test_criterion_5_gradient_stability(equivalence):
    violations = sum(rep.violations[p]["til_grad<=bar_grad"] for rep in equivalence.values() for p in rep.violations)
    lows = {(d, p): rep.constants[p]["c1_prime"] for d, rep in equivalence.items() for p in rep.constants}
    change = max(rep.stability[p]["c1_prime"] for rep in equivalence.values() for p in rep.stability)
    ok = violations == 0 and change <= 0.1
    shown = ", ".join(f"d{d} p{p}: {v:.4f}" for (d, p), v in sorted(lows.items()))
    _report(5, ok, f"{violations} violations of |grad u_tilde| <= |grad u_bar|; lower ratios {shown}; max change on doubling {change:.2%}")


def test_criterion_6_smooth_interpolant(equivalence):
    rng = np.random.default_rng(1)
    worst = 0.0
    for i in range(100):
        d = 1 + i % 2
        dom = LatticeDomain.cube(d, 16 if d == 1 else 8)
        u = LatticeFunction.random(dom, rng)
        f = smooth_nodal_interpolant(make_q1(d), u)
        sites = dom.sites().reshape(-1, d).astype(float)
        worst = max(worst, float(np.max(np.abs(f(sites) - u.values.reshape(-1, 1)))))
    C = {d: rep.constants["2"]["C"] for d, rep in equivalence.items()}
    change = max(rep.stability["2"]["C"] for rep in equivalence.values())
    ok = worst <= 1e-10 and all(math.isfinite(c) for c in C.values()) and change <= 0.1
    _report(6, ok, f"interpolation error {worst:.1e} over 100 fields; inverse-operator constant C = {C[1]:.4f} (d1), {C[2]:.4f} (d2), change on doubling {change:.2%}")


def test_criterion_7_dual_basis():
    dual = build_dual(make_q1(1))
    bi = float(np.max(np.abs(dual.biorthogonality_residuals())))
    q = QuasiInterpolant(dual)
    dom = LatticeDomain.cube(1, 12)
    rng = np.random.default_rng(2)
    from latticeinterp.interp import InterpolantField

    proj = 0.0
    for _ in range(20):
        w = LatticeFunction.random(dom, rng)
        c = q.coefficients(InterpolantField.tilde(w, make_q1(1)), dom.sites().reshape(-1, 1))
        proj = max(proj, float(np.max(np.abs(c - w.values))))
    rows = reproduction_table(q, 4)
    cubic = max(r["residual"] for r in rows if r["degree"] <= 3)
    quartic = min(r["residual"] for r in rows if r["degree"] == 4)
    ok = len(dual.index_set) == 7 and bi <= 1e-9 and proj <= 1e-9 and cubic <= 1e-9 and quartic >= 1e-3
    _report(7, ok, f"biorthogonality {bi:.1e} (7 functionals), projector {proj:.1e}, cubic {cubic:.1e}, quartic {quartic:.3f}")


def test_criterion_8_convergence_rates():
    cases = [("bar", 0), ("bar", 1), ("smooth", 0), ("smooth", 1), ("smooth", 2), ("quasi", 0), ("quasi", 1), ("quasi", 2)]
    lines, ok = [], True
    for d in (1, 2):
        for kind, j in cases:
            rep = run_convergence(ConvergenceStudy(kind=kind, function="sin", dim=d, j=j, p=2.0, ladder=(8, 16, 32, 64)))
            ok &= rep.slope_ok
            lines.append(f"d{d} {kind} j{j}: {rep.slope:.2f}")
    _report(8, ok, "slopes " + "; ".join(lines))


def test_criterion_9_two_basis_difference():
    res = two_basis_difference_check(make_q1(2), make_p1(2, crisscross_partition()), Polynomial.monomial((3, 0)))
    _report(9, res.residual <= 1e-6, f"affinity residual {res.residual:.1e} for x1^3 with (Q1, P1 crisscross)")


def test_criterion_10_regularity():
    worst_fd, jumps_ok, bounded = 0.0, True, 0.0
    for d in (1, 2):
        sb = smoothed(make_q1(d))
        rng = np.random.default_rng(d)
        x = rng.uniform(-2, 2, size=(400, d))
        # stay away from the integer knots
        x = np.where(np.abs(x - np.round(x)) < 0.05, x + 0.1, x)
        eps = 1e-5
        second = sb.derivative(x, 2)
        for i in range(d):
            e = np.zeros(d)
            e[i] = eps
            fd = (sb.derivative(x + e, 1) - sb.derivative(x - e, 1)) / (2 * eps)
            worst_fd = max(worst_fd, float(np.max(np.abs(second[..., i] - fd))))
    sb1 = smoothed(make_q1(1))
    for k, expected in zip(range(-2, 2), (1.0, -3.0, 3.0, -1.0)):
        t = np.linspace(k + 0.01, k + 0.99, 25)[:, None]
        third = sb1.derivative(t, 3).reshape(-1)
        jumps_ok &= bool(np.allclose(third, expected, atol=1e-12))
        bounded = max(bounded, float(np.max(np.abs(third))))
    ok = worst_fd <= 1e-6 and jumps_ok and bounded <= 3.0 + 1e-12
    _report(10, ok, f"second derivative vs finite differences {worst_fd:.1e} (d=1,2); third derivative piecewise (1, -3, 3, -1), max {bounded:.1f}")
