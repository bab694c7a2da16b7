"""Experiment harness: convergence rates, norm-equivalence constants, the (Z4) counterexample and smoothness measures.

Every study returns a report object with ``to_dict`` (JSON) and ``rows`` (CSV)
views and a ``passed`` flag collecting its hard assertions. Reports depend only
on their configuration and seed.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .basis.checks import neighbor_offsets, verify_assumptions
from .basis.nodal import NodalBasis, make_basis
from .basis.smoothed import smoothed
from .convop import apply, build_operator, smooth_nodal_interpolant, solve
from .interp import InterpolantField, Kind, component_norms, lp_norm_field, sample_to_lattice
from .lattice import DeformationField, InvalidParameterError, LatticeDomain, LatticeFunction
from .quasi import Polynomial, QuasiInterpolant, apply_quasi, build_dual

SCHEMA_VERSION = "1.0"

#: relative slack allowed on sampled upper-bound inequalities
UPPER_BOUND_SLACK = 1e-10

EXPECTED_SLOPES = {
    "bar": {0: 2.0, 1: 1.0},
    "smooth": {0: 4.0, 1: 3.0, 2: 2.0, 3: 1.0},
    "quasi": {0: 4.0, 1: 3.0, 2: 2.0, 3: 1.0},
}

#: accepted deviation of a fitted slope from the expected one, by derivative order
SLOPE_TOLERANCE = {
    "bar": {0: 0.1, 1: 0.1},
    "smooth": {0: 0.3, 1: 0.3, 2: 0.2, 3: 0.3},
    "quasi": {0: 0.3, 1: 0.3, 2: 0.2, 3: 0.3},
}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


class Report:
    """Shared serialisation for study reports."""

    def to_dict(self) -> dict:
        out = _jsonable(asdict(self))
        out["schema_version"] = SCHEMA_VERSION
        out["study"] = type(self).__name__.removesuffix("Report").lower()
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def rows(self) -> list[dict]:
        raise NotImplementedError

    def to_csv(self) -> str:
        rows = [_jsonable(r) for r in self.rows()]
        buf = io.StringIO()
        fields = list(rows[0]) if rows else []
        writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        return buf.getvalue()

    def write(self, path: str) -> None:
        text = self.to_csv() if str(path).endswith(".csv") else self.to_json() + "\n"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# test-function catalog


@dataclass(frozen=True)
class CatalogFunction:
    """Test function with analytic derivatives: ``derivative(x, j)`` has shape ``(n,) + (d,) * j``."""

    name: str
    dim: int
    periodic: bool
    derivative: Callable

    def __call__(self, x) -> np.ndarray:
        return self.derivative(x, 0)


def _tensor_product(factor: Callable[[np.ndarray, int], np.ndarray], d: int) -> Callable:
    def deriv(x, order=0):
        x = np.asarray(x, dtype=float).reshape(-1, d)
        table = [[factor(x[:, a], n) for n in range(order + 1)] for a in range(d)]
        out = np.empty((x.shape[0],) + (d,) * order)
        for idx in itertools.product(range(d), repeat=order):
            counts = np.bincount(np.array(idx, dtype=int), minlength=d) if order else np.zeros(d, int)
            val = np.ones(x.shape[0])
            for a in range(d):
                val = val * table[a][counts[a]]
            out[(Ellipsis,) + idx] = val
        return out

    return deriv


def _sin_factor(t, n):
    w = 2.0 * math.pi
    return w**n * np.sin(w * t + n * math.pi / 2.0)


def _bump_factor(t, n):
    # exp(cos(w t)) and its first three derivatives
    w = 2.0 * math.pi
    c, s = np.cos(w * t), np.sin(w * t)
    g = np.exp(c)
    poly = {0: 1.0, 1: -s, 2: s * s - c, 3: 3.0 * s * c + s - s**3}
    if n not in poly:
        raise InvalidParameterError("bump derivatives are tabulated up to order 3")
    return w**n * poly[n] * g


def catalog(name: str, d: int) -> CatalogFunction:
    """``sin``: prod sin(2 pi x_i); ``bump``: prod exp(cos(2 pi x_i)); ``cubic``: a non-periodic cubic."""
    if name == "sin":
        return CatalogFunction(name, d, True, _tensor_product(_sin_factor, d))
    if name == "bump":
        return CatalogFunction(name, d, True, _tensor_product(_bump_factor, d))
    if name == "cubic":
        terms = {tuple(3 * int(i == 0) for i in range(d)): 1.0, (0,) * d: 0.5}
        if d > 1:
            terms[(1, 1) + (0,) * (d - 2)] = -2.0
        poly = Polynomial(terms, d)
        return CatalogFunction(name, d, False, lambda x, order=0: poly.derivative(np.asarray(x).reshape(-1, d), order))
    raise InvalidParameterError(f"unknown catalog function {name!r}; expected sin, bump or cubic")


# ---------------------------------------------------------------------------
# convergence


@dataclass
class ConvergenceStudy:
    kind: str = "bar"
    function: str = "sin"
    dim: int = 1
    j: int = 0
    p: float = 2.0
    basis: str = "q1"
    ladder: tuple = (8, 16, 32, 64)
    quad_degree: int = 9

    def __post_init__(self):
        if self.kind not in EXPECTED_SLOPES:
            raise InvalidParameterError(f"kind must be one of {sorted(EXPECTED_SLOPES)}")
        if len(self.ladder) < 4:
            raise InvalidParameterError("the ladder needs at least 4 rungs")
        if self.j not in EXPECTED_SLOPES[self.kind]:
            raise InvalidParameterError(f"derivative order {self.j} is not available for kind {self.kind}")


@dataclass
class ConvergenceReport(Report):
    config: dict
    h: list
    errors: list
    slope: float
    fit_residual: float
    expected_slope: float
    slope_tolerance: float
    monotone: bool
    window: bool
    exact: bool
    flags: list = field(default_factory=list)

    @property
    def slope_ok(self) -> bool:
        return abs(self.slope - self.expected_slope) <= self.slope_tolerance

    @property
    def passed(self) -> bool:
        """Exact reproduction, or a fitted slope within tolerance of the expected rate."""
        return self.exact or self.slope_ok

    def rows(self) -> list[dict]:
        return [{"h": h, "error": e} for h, e in zip(self.h, self.errors)]


def _cell_window(extent: tuple, radius: float) -> np.ndarray:
    """Cells whose contributing sites do not wrap across the periodic seam."""
    R = math.ceil(radius)
    mask = np.ones(extent, dtype=bool)
    for axis, n in enumerate(extent):
        idx = np.arange(n)
        ok = (idx >= R - 1) & (idx <= n - 1 - R)
        shape = [1] * len(extent)
        shape[axis] = n
        mask &= ok.reshape(shape)
    return mask


def convergence_field(kind: str, basis: NodalBasis, v: Callable, N: int, h: float, quasi: QuasiInterpolant | None = None):
    """The interpolant of ``x -> v(h x)`` on the unit lattice of extent ``N``."""
    dom = LatticeDomain.cube(basis.dim, N)
    if kind == "quasi":
        return apply_quasi(quasi, v, dom, h)
    u = sample_to_lattice(v, dom, h)
    if kind == "bar":
        return InterpolantField.bar(u, basis)
    return smooth_nodal_interpolant(basis, u)


def run_convergence(study: ConvergenceStudy) -> ConvergenceReport:
    """Physical-domain ``W^{j,p}`` errors on the ladder ``h = 1/N`` and their log-log slope."""
    d, j, p = study.dim, study.j, float(study.p)
    v = catalog(study.function, d)
    if study.kind == "smooth" and not v.periodic:
        raise InvalidParameterError("the smooth nodal interpolant is global; use a periodic catalog function")
    basis = make_basis(study.basis, d)
    quasi = QuasiInterpolant(build_dual(smoothed(basis))) if study.kind == "quasi" else None
    quad = basis.cell_quadrature(study.quad_degree)
    hs, errs = [], []
    for N in study.ladder:
        h = 1.0 / N
        f = convergence_field(study.kind, basis, v, N, h, quasi)
        mask = None if v.periodic else _cell_window(f.domain.extent, f.support_radius)

        def target(X, h=h):
            return (h**j * v.derivative(h * X, j))[:, None]

        unit = lp_norm_field(f, p, j, quad, target=target, cell_mask=mask).value
        scale = h ** ((d / p if math.isfinite(p) else 0.0) - j)
        hs.append(h)
        errs.append(unit * scale)
    errs_arr = np.array(errs)
    exact = bool(np.all(errs_arr < 1e-9))
    flags = []
    if exact:
        slope, resid = 0.0, 0.0
        flags.append("errors at the quadrature floor: exact reproduction")
    else:
        logh, loge = np.log(hs), np.log(np.maximum(errs_arr, 1e-300))
        coef = np.polyfit(logh, loge, 1)
        slope = float(coef[0])
        resid = float(np.sqrt(np.mean((np.polyval(coef, logh) - loge) ** 2)))
        if resid > 0.05:
            flags.append(f"log-log fit residual {resid:.3g} exceeds 0.05")
    monotone = bool(np.all(np.diff(errs_arr) < 0)) or exact
    if not monotone:
        flags.append("non-monotone error ladder")
    return ConvergenceReport(
        config=asdict(study),
        h=hs,
        errors=errs,
        slope=slope,
        fit_residual=resid,
        expected_slope=EXPECTED_SLOPES[study.kind][j],
        slope_tolerance=SLOPE_TOLERANCE[study.kind][j],
        monotone=monotone,
        window=not v.periodic,
        exact=exact,
        flags=flags,
    )


# ---------------------------------------------------------------------------
# norm equivalence


@dataclass
class EquivalenceStudy:
    basis: str = "q1"
    dim: int = 1
    ps: tuple = (1.0, 2.0, 4.0, math.inf)
    samples: int = 300
    extent: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.samples < 100:
            raise InvalidParameterError("equivalence studies need at least 100 fields")

    @property
    def box(self) -> int:
        return self.extent if self.extent is not None else (32 if self.dim == 1 else 16)


def adversarial_fields(domain: LatticeDomain) -> tuple[list[str], np.ndarray]:
    """Constant, per-axis sawtooth and every cosine plane wave on the DFT half-grid."""
    d, ext = domain.dim, domain.extent
    sites = domain.sites().astype(float)
    names, fields = ["constant"], [np.ones(ext)]
    for a in range(d):
        names.append(f"sawtooth{a}")
        fields.append(sites[..., a] - (ext[a] - 1) / 2.0)
    for k in itertools.product(*[range(n // 2 + 1) for n in ext]):
        if not any(k):
            continue
        names.append("wave" + "_".join(map(str, k)))
        phase = sum(2.0 * math.pi * k[a] * sites[..., a] / ext[a] for a in range(d))
        fields.append(np.cos(phase))
    return names, np.stack(fields, axis=-1)


def random_fields(domain: LatticeDomain, count: int, rng: np.random.Generator) -> tuple[list[str], np.ndarray]:
    """Cycle through white noise, low-pass (smooth) noise and Nyquist-modulated smooth noise."""
    d, ext = domain.dim, domain.extent
    freqs = np.meshgrid(*[np.fft.fftfreq(n) for n in ext], indexing="ij")
    lowpass = np.exp(-sum(f**2 for f in freqs) / (2 * 0.08**2))
    nyq = (-1.0) ** np.sum(domain.sites(), axis=-1)
    names, fields = [], []
    kinds = ("white", "smooth", "oscillatory")
    for i in range(count):
        noise = rng.standard_normal(ext)
        kind = kinds[i % 3]
        if kind != "white":
            noise = np.real(np.fft.ifftn(np.fft.fftn(noise) * lowpass))
            noise /= max(np.abs(noise).max(), 1e-300)
            if kind == "oscillatory":
                noise = noise * nyq
        names.append(kind)
        fields.append(noise)
    return names, np.stack(fields, axis=-1) if fields else np.zeros(ext + (0,))


def _batched_lp(values: np.ndarray, p: float, d: int) -> np.ndarray:
    flat = np.abs(values.reshape(-1, values.shape[-1]))
    if math.isinf(p):
        return flat.max(axis=0)
    return np.sum(flat**p, axis=0) ** (1.0 / p)


def _equivalence_quantities(basis: NodalBasis, domain: LatticeDomain, fields: np.ndarray, p: float, op) -> dict:
    U = LatticeFunction(domain, fields)
    d = domain.dim
    sb = smoothed(basis)
    Cu = apply(op, U)
    bar = InterpolantField.bar(U, basis)
    til = InterpolantField(U, basis, Kind.TILDE, sb)
    q = {
        "u_lp": _batched_lp(fields, p, d),
        "Cu_lp": _batched_lp(Cu.values, p, d),
        "bar_L": component_norms(bar, p, 0),
        "bar_grad": component_norms(bar, p, 1),
        "til_L": component_norms(til, p, 0),
        "til_grad": component_norms(til, p, 1),
    }
    if op.invertible:
        G = solve(op, U)
        itil = InterpolantField(G, basis, Kind.TILDE, sb)
        q["Itil_grad"] = component_norms(itil, p, 1)
        q["Cinv_err"] = _batched_lp(G.values - fields, p, d)
    return q


# ratios: name -> (numerator, denominator, which extreme is the constant)
_RATIOS = {
    "c0": ("Cu_lp", "u_lp", "min"),
    "c1": ("til_L", "Cu_lp", "min"),
    "c2": ("bar_L", "u_lp", "max"),
    "c1_prime": ("til_grad", "bar_grad", "min"),
    "ct0": ("Itil_grad", "bar_grad", "min"),
    "ct1": ("Itil_grad", "bar_grad", "max"),
    "C": ("Cinv_err", "bar_grad", "max"),
}

# upper bounds checked sample-wise with constant 1: name -> (smaller, larger)
_UPPER = {
    "Cu_lp<=u_lp": ("Cu_lp", "u_lp"),
    "til_L<=bar_L": ("til_L", "bar_L"),
    "bar_L<=u_lp": ("bar_L", "u_lp"),
    "til_grad<=bar_grad": ("til_grad", "bar_grad"),
}


def _extremes(q: dict, n: int) -> tuple[dict, dict]:
    consts, argext = {}, {}
    for name, (num, den, which) in _RATIOS.items():
        if num not in q:
            continue
        a, b = q[num][:n], q[den][:n]
        ok = b > 1e-12 * max(b.max(initial=0.0), 1e-300)
        if not ok.any():
            continue
        r = np.where(ok, a / np.where(ok, b, 1.0), np.nan)
        i = int(np.nanargmin(r) if which == "min" else np.nanargmax(r))
        consts[name] = float(r[i])
        argext[name] = i
    return consts, argext


@dataclass
class EquivalenceReport(Report):
    config: dict
    field_count: int
    constants: dict
    attained_by: dict
    doubled_constants: dict
    stability: dict
    violations: dict
    worst_excess: dict

    @property
    def passed(self) -> bool:
        return all(v == 0 for per_p in self.violations.values() for v in per_p.values())

    def stable(self, tol: float = 0.1) -> bool:
        return all(v <= tol for per_p in self.stability.values() for v in per_p.values())

    def rows(self) -> list[dict]:
        out = []
        for p, consts in self.constants.items():
            for name, val in consts.items():
                out.append(
                    {
                        "p": p,
                        "constant": name,
                        "value": val,
                        "doubled": self.doubled_constants[p][name],
                        "relative_change": self.stability[p][name],
                        "attained_by": self.attained_by[p][name],
                    }
                )
        return out


def run_equivalence(study: EquivalenceStudy) -> EquivalenceReport:
    """Sample the norm-equivalence chain on ``samples`` fields and again on twice as many."""
    d = study.dim
    basis = make_basis(study.basis, d)
    domain = LatticeDomain.cube(d, study.box)
    op = build_operator(basis, domain)
    adv_names, adv = adversarial_fields(domain)
    rng = np.random.default_rng(study.seed)
    n_random = max(2 * study.samples - adv.shape[-1], 2 * study.samples // 2)
    rnd_names, rnd = random_fields(domain, n_random, rng)
    names = adv_names + rnd_names
    fields = np.concatenate([adv, rnd], axis=-1)
    n_single = max(study.samples, adv.shape[-1] + 1)
    n_double = fields.shape[-1]
    if n_double < 2 * n_single:
        raise InvalidParameterError("internal: doubled ensemble is too small")
    constants, attained, doubled, stability, violations, excess = {}, {}, {}, {}, {}, {}
    for p in study.ps:
        key = "inf" if math.isinf(p) else f"{float(p):g}"
        q = _equivalence_quantities(basis, domain, fields, float(p), op)
        c1, a1 = _extremes(q, n_single)
        c2, _ = _extremes(q, n_double)
        constants[key] = c1
        attained[key] = {k: names[i] for k, i in a1.items()}
        doubled[key] = c2
        stability[key] = {k: abs(c2[k] - c1[k]) / max(abs(c1[k]), 1e-300) for k in c1}
        violations[key], excess[key] = {}, {}
        for name, (lo, hi) in _UPPER.items():
            a, b = q[lo], q[hi]
            # roundoff-sized slack, relative to the bound and to the field size
            over = a - b - UPPER_BOUND_SLACK * (b + q["u_lp"])
            violations[key][name] = int(np.sum(over > 0))
            excess[key][name] = float(np.max((a - b) / np.maximum(b, 1e-300)))
    return EquivalenceReport(
        config={**asdict(study), "extent": study.box},
        field_count=n_single,
        constants=constants,
        attained_by=attained,
        doubled_constants=doubled,
        stability=stability,
        violations=violations,
        worst_excess=excess,
    )


# ---------------------------------------------------------------------------
# counterexample


@dataclass
class CounterexampleReport(Report):
    extent: int
    max_abs_exthat: float
    max_abs_q1: float
    min_multiplier: float
    zero_mode_index: list
    z4_failed: bool
    z4_detail: str
    other_assumptions_pass: bool
    checks: dict

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def rows(self) -> list[dict]:
        return [{"check": k, "passed": v} for k, v in self.checks.items()]


def run_counterexample(extent: int = 9, samples: int = 1000, seed: int = 0) -> CounterexampleReport:
    """``u = (-1, 0, 1)`` repeated: its extended-hat interpolant vanishes identically."""
    if extent % 3:
        raise InvalidParameterError("extent must be a multiple of 3 for a periodic (-1, 0, 1) pattern")
    exthat = make_basis("exthat", 1)
    domain = LatticeDomain.cube(1, extent)
    u = LatticeFunction(domain, np.array([(-1.0, 0.0, 1.0)[i % 3] for i in range(extent)]))
    x = np.random.default_rng(seed).uniform(0.0, extent, size=(samples, 1))
    max_ext = float(np.max(np.abs(InterpolantField.bar(u, exthat)(x))))
    q1 = make_basis("q1", 1)
    grid = np.concatenate([x, domain.sites().astype(float)])
    max_q1 = float(np.max(np.abs(InterpolantField.bar(u, q1)(grid))))
    op = build_operator(exthat, domain)
    audit = verify_assumptions(exthat)
    checks = {
        "exthat_interpolant_vanishes": max_ext <= 1e-12,
        "q1_interpolant_sup_is_one": abs(max_q1 - 1.0) <= 1e-12,
        "multiplier_has_zero_mode": not op.invertible,
        "z4_fails": not audit["Z4"].passed,
        "z1_z3_pass": all(audit[z].passed for z in ("Z1", "Z2", "Z3")),
    }
    return CounterexampleReport(
        extent=extent,
        max_abs_exthat=max_ext,
        max_abs_q1=max_q1,
        min_multiplier=op.min_multiplier,
        zero_mode_index=[int(i) for i in np.unravel_index(np.argmin(op.multiplier), op.multiplier.shape)],
        z4_failed=not audit["Z4"].passed,
        z4_detail=audit["Z4"].detail,
        other_assumptions_pass=checks["z1_z3_pass"],
        checks=checks,
    )


# ---------------------------------------------------------------------------
# smoothness measure


@dataclass
class SmoothnessReport(Report):
    k: int
    p: float
    norm: float
    deformation_residual: float | None
    site: list | None
    local_norm: float | None
    far_norm: float | None

    @property
    def passed(self) -> bool:
        return math.isfinite(self.norm)

    def rows(self) -> list[dict]:
        return [
            {
                "k": self.k,
                "p": self.p,
                "norm": self.norm,
                "deformation_residual": self.deformation_residual,
                "local_norm": self.local_norm,
                "far_norm": self.far_norm,
            }
        ]


def _site_window(domain: LatticeDomain, site, radius: float) -> np.ndarray:
    """Cells meeting the support box of radius ``radius`` around ``site`` (periodic distance)."""
    cells = domain.sites()
    site = np.asarray(site)
    ext = np.array(domain.extent)
    R = math.ceil(radius)
    # cell c covers [c, c + 1]; it meets [site - R, site + R] iff c in [site - R, site + R - 1]
    diff = np.mod(cells - site + R, ext)
    return np.all(diff <= 2 * R - 1, axis=-1)


def run_smoothness_measure(
    u: LatticeFunction | DeformationField,
    k: int = 2,
    p: float = 2.0,
    basis: str | NodalBasis = "q1",
    site=None,
) -> SmoothnessReport:
    """``|| grad^k I~u ||_{L^p}``; for a deformation ``y = A x + u`` also ``|| grad I~y - A ||``.

    With ``site`` given, the norm is split into the cells within the smoothed
    support of that site and the rest.
    """
    if not 0 <= k <= 3:
        raise InvalidParameterError("k must be in 0..3")
    disp = u.displacement if isinstance(u, DeformationField) else u
    b = make_basis(basis, disp.dim) if isinstance(basis, str) else basis
    f = smooth_nodal_interpolant(b, disp)
    norm = lp_norm_field(f, p, k).value
    deform = None
    if isinstance(u, DeformationField):
        # grad I~y = A + grad I~u, so the residual is the gradient norm of the displacement part
        deform = lp_norm_field(f, p, 1).value
    local = far = None
    if site is not None:
        mask = _site_window(disp.domain, site, f.support_radius)
        local = lp_norm_field(f, p, k, cell_mask=mask).value
        far = lp_norm_field(f, p, k, cell_mask=~mask).value
    return SmoothnessReport(
        k=k,
        p=float(p),
        norm=norm,
        deformation_residual=deform,
        site=None if site is None else [int(s) for s in np.atleast_1d(site)],
        local_norm=local,
        far_norm=far,
    )


def neighbor_cells(d: int, radius: float) -> np.ndarray:
    """Offsets of the cells touched by a support of the given radius (re-exported for tests)."""
    return neighbor_offsets(d, radius)
