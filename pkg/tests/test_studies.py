import json
import math

import numpy as np
import pytest

from latticeinterp.basis import make_q1
from latticeinterp.lattice import DeformationField, InvalidParameterError, LatticeDomain, LatticeFunction, affine_sample
from latticeinterp.studies import (
    SCHEMA_VERSION,
    ConvergenceStudy,
    EquivalenceStudy,
    adversarial_fields,
    catalog,
    run_convergence,
    run_counterexample,
    run_equivalence,
    run_smoothness_measure,
)


@pytest.mark.parametrize("name", ["sin", "bump", "cubic"])
@pytest.mark.parametrize("d", [1, 2])
@pytest.mark.parametrize("order", [1, 2, 3])
def test_catalog_derivatives_match_finite_differences(name, d, order):
    f = catalog(name, d)
    x = np.random.default_rng(order).uniform(0.1, 0.9, size=(5, d))
    eps = 1e-5
    lower = f.derivative(x, order - 1)
    got = f.derivative(x, order)
    for i in range(d):
        step = np.zeros(d)
        step[i] = eps
        fd = (f.derivative(x + step, order - 1) - f.derivative(x - step, order - 1)) / (2 * eps)
        assert np.allclose(got[..., i], fd, rtol=1e-6, atol=1e-5 * (1 + np.max(np.abs(lower))))


def test_catalog_unknown():
    with pytest.raises(InvalidParameterError):
        catalog("gauss", 1)


@pytest.mark.parametrize(
    "kwargs",
    [{"kind": "plain"}, {"ladder": (8, 16, 32)}, {"kind": "bar", "j": 2}],
)
def test_convergence_study_validation(kwargs):
    with pytest.raises(InvalidParameterError):
        ConvergenceStudy(**kwargs)


def test_smooth_kind_rejects_nonperiodic_function():
    with pytest.raises(InvalidParameterError):
        run_convergence(ConvergenceStudy(kind="smooth", function="cubic"))


@pytest.mark.parametrize("kind,j", [("bar", 0), ("bar", 1), ("smooth", 0), ("smooth", 2), ("quasi", 1)])
def test_convergence_1d(kind, j):
    rep = run_convergence(ConvergenceStudy(kind=kind, j=j))
    assert rep.passed and rep.slope_ok and rep.monotone
    assert len(rep.errors) == 4


def test_quasi_cubic_is_exact():
    rep = run_convergence(ConvergenceStudy(kind="quasi", function="cubic"))
    assert rep.exact and rep.passed and max(rep.errors) <= 1e-9


def test_convergence_report_is_deterministic(tmp_path):
    study = ConvergenceStudy(kind="bar", j=1, ladder=(8, 16, 32, 64))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run_convergence(study).write(str(a))
    run_convergence(study).write(str(b))
    assert a.read_bytes() == b.read_bytes()
    payload = json.loads(run_convergence(study).to_json())
    assert payload["schema_version"] == SCHEMA_VERSION and payload["study"] == "convergence"


def test_adversarial_fields_cover_constant_and_nyquist():
    dom = LatticeDomain.cube(1, 8)
    names, fields = adversarial_fields(dom)
    assert fields.shape[0] == 8 and fields.shape[-1] == len(names)
    assert any(np.allclose(fields[:, i], fields[0, i]) for i in range(len(names)))
    nyq = (-1.0) ** np.arange(8)
    assert any(np.allclose(fields[:, i] / fields[0, i], nyq) for i in range(len(names)) if fields[0, i] != 0)


def test_equivalence_q1_1d():
    rep = run_equivalence(EquivalenceStudy(basis="q1", dim=1, samples=100))
    assert rep.passed and rep.stable()
    assert rep.field_count >= 100
    for p, consts in rep.constants.items():
        assert consts["c0"] == pytest.approx(1 / 3, rel=1e-6), p
        assert consts["C"] == pytest.approx(1.0, rel=1e-6)
    assert set(rep.constants) == {"1", "2", "4", "inf"}


def test_equivalence_extended_hat_has_zero_lower_constant():
    rep = run_equivalence(EquivalenceStudy(basis="exthat", dim=1, samples=100, ps=(2.0,), extent=9))
    assert rep.constants["2"]["c0"] <= 1e-12
    assert "C" not in rep.constants["2"]


def test_equivalence_rejects_small_ensemble():
    with pytest.raises(InvalidParameterError):
        EquivalenceStudy(samples=10)


def test_counterexample():
    rep = run_counterexample()
    assert rep.passed
    assert rep.max_abs_exthat <= 1e-12
    assert rep.max_abs_q1 == pytest.approx(1.0)
    assert abs(rep.min_multiplier) <= 1e-14
    assert rep.z4_failed and rep.other_assumptions_pass


def test_counterexample_extent_must_fit_pattern():
    with pytest.raises(InvalidParameterError):
        run_counterexample(extent=10)


def test_smoothness_zero_and_affine():
    dom = LatticeDomain.cube(2, 8)
    assert run_smoothness_measure(LatticeFunction.zeros(dom), k=2).norm == 0.0
    rep = run_smoothness_measure(LatticeFunction.constant(dom, 4.0), k=2)
    assert rep.norm <= 1e-12
    # a homogeneous deformation has a zero residual
    y = DeformationField.admissible(np.array([[1.2, 0.1], [0.0, 0.8]]), LatticeFunction.zeros(dom, 2))
    rep = run_smoothness_measure(y, k=2)
    assert rep.deformation_residual == 0.0 and rep.norm == 0.0


def test_smoothness_rejects_bad_order():
    with pytest.raises(InvalidParameterError):
        run_smoothness_measure(LatticeFunction.zeros(LatticeDomain.cube(1, 8)), k=4)


def test_smoothness_spike_is_concentrated_near_the_site():
    dom = LatticeDomain.cube(1, 32)
    rep = run_smoothness_measure(LatticeFunction.delta(dom, (16,)), k=2, site=(16,))
    assert rep.local_norm > 0
    # the smooth interpolant of a spike decays geometrically away from the site
    assert rep.far_norm < 0.2 * rep.local_norm
    assert rep.norm == pytest.approx(math.hypot(rep.local_norm, rep.far_norm), rel=1e-12)


def test_smoothness_affine_lattice_function_near_seam_free_window():
    dom = LatticeDomain.cube(1, 16)
    u = affine_sample(dom, 0.0, 2.0)
    assert run_smoothness_measure(u, k=1, basis=make_q1(1)).norm <= 1e-12
