"""Sampled verification of the standing assumptions on a nodal basis.

Z1 Lipschitz, Z2 compact support, Z3 reproduction of affine functions,
Z4 Kronecker property at the lattice sites.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .nodal import NodalBasis


@dataclass
class AssumptionResult:
    name: str
    passed: bool
    residual: float
    detail: str = ""


@dataclass
class AssumptionReport:
    basis: str
    results: dict[str, AssumptionResult] = field(default_factory=dict)

    def __getitem__(self, key) -> AssumptionResult:
        return self.results[key]

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.results.values())

    def to_dict(self) -> dict:
        return {
            "basis": self.basis,
            "results": {
                k: {"passed": r.passed, "residual": r.residual, "detail": r.detail}
                for k, r in self.results.items()
            },
        }


def neighbor_offsets(d: int, radius: float) -> np.ndarray:
    """Integer offsets ``o`` with ``y + o`` possibly inside the support for ``y in [0,1)^d``."""
    R = math.ceil(radius)
    return np.array(list(itertools.product(range(-R, R), repeat=d)), dtype=float)


def lattice_sum(fn, x: np.ndarray, weights, radius: float) -> np.ndarray:
    """``sum_xi w(xi) fn(x - xi)`` over the infinite lattice, for points ``x`` of shape ``(n, d)``.

    ``weights`` maps an ``(n, d)`` array of sites to per-site weights.
    """
    d = x.shape[-1]
    base = np.floor(x)
    total = 0.0
    for o in neighbor_offsets(d, radius):
        xi = base - o
        total = total + weights(xi) * fn(x - xi)
    return total


def verify_assumptions(basis: NodalBasis, samples: int = 1000, tol: float = 1e-12, seed: int = 0) -> AssumptionReport:
    """Sampled pass/fail with worst residual for each of Z1-Z4."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    d = basis.dim
    r = basis.support_radius
    report = AssumptionReport(repr(basis))

    # Z1: difference quotients against the declared constant
    x = rng.uniform(-r - 0.5, r + 0.5, size=(samples, d))
    step = rng.standard_normal((samples, d))
    step *= rng.uniform(1e-3, 0.5, size=(samples, 1)) / np.linalg.norm(step, axis=1, keepdims=True)
    quot = np.abs(basis.value(x + step) - basis.value(x)) / np.linalg.norm(step, axis=1)
    worst = float(quot.max())
    report.results["Z1"] = AssumptionResult(
        "Z1", worst <= basis.lipschitz * (1 + tol) + tol, max(0.0, worst - basis.lipschitz),
        f"max difference quotient {worst:.6g}, declared constant {basis.lipschitz:.6g}",
    )

    # Z2: exactly zero outside [-r, r]^d
    y = rng.uniform(-r - 2.0, r + 2.0, size=(samples, d))
    far = rng.integers(0, d, size=samples)
    sign = rng.choice([-1.0, 1.0], size=samples)
    y[np.arange(samples), far] = sign * rng.uniform(r, r + 2.0, size=samples)
    y[np.arange(samples), far] += sign * 1e-9
    leak = float(np.max(np.abs(basis.value(y))))
    report.results["Z2"] = AssumptionResult("Z2", leak == 0.0, leak, f"support radius {r}")

    # Z3: sum_xi zeta(x - xi)(a + b.xi) = a + b.x
    x = rng.uniform(0.0, 1.0, size=(samples, d))
    a = rng.standard_normal(samples)
    b = rng.standard_normal((samples, d))
    lhs = lattice_sum(basis.value, x, lambda xi: a + np.sum(b * xi, axis=-1), r)
    res3 = float(np.max(np.abs(lhs - (a + np.sum(b * x, axis=-1)))))
    report.results["Z3"] = AssumptionResult("Z3", res3 <= tol, res3, "random (a, b) at random x in one period")

    # Z4: Kronecker delta on lattice sites in the support box
    R = math.ceil(r)
    sites = np.array(list(itertools.product(range(-R, R + 1), repeat=d)), dtype=float)
    vals = basis.value(sites)
    expected = np.all(sites == 0, axis=-1).astype(float)
    err = np.abs(vals - expected)
    res4 = float(err.max())
    bad = [(tuple(int(s) for s in site), float(v)) for site, v, e in zip(sites, vals, err) if e > tol]
    detail = "zeta(0) = %.6g" % float(basis.value(np.zeros((1, d)))[0])
    if bad:
        detail += "; violations: " + ", ".join(f"zeta{site}={v:.6g}" for site, v in bad[:8])
    report.results["Z4"] = AssumptionResult("Z4", res4 <= tol, res4, detail)
    return report
