"""Command-line entry point: ``latticeinterp <group> <verb> [options]``.

The exit status is 1 when a hard assertion of the requested run fails and 0
otherwise; invalid input exits with status 2.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys

import numpy as np

from . import io as lattice_io
from .basis import crisscross_partition, kuhn_partition, load_custom, make_basis, make_p1, verify_assumptions
from .convop import build_operator, inverse_kernel
from .interp import InterpolantField, default_quadrature, lp_norm_field
from .lattice import DeformationField, InvalidParameterError, LatticeDomain, LatticeFunction
from .quasi import QuasiInterpolant, build_dual, reproduction_table
from .studies import (
    ConvergenceStudy,
    EquivalenceStudy,
    run_convergence,
    run_counterexample,
    run_equivalence,
    run_smoothness_measure,
)


def _p(text: str) -> float:
    if text.lower() in ("inf", "infinity"):
        return math.inf
    value = float(text)
    if value < 1:
        raise argparse.ArgumentTypeError("p must be >= 1 or 'inf'")
    return value


def _basis(args):
    if getattr(args, "custom", None):
        return load_custom(args.custom)
    if args.basis == "p1" and getattr(args, "partition", None):
        part = crisscross_partition() if args.partition == "crisscross" else kuhn_partition(args.dim)
        return make_p1(args.dim, part)
    return make_basis(args.basis, args.dim)


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _emit_report(report, out: str | None) -> None:
    if out:
        report.write(out)
    else:
        _emit(report.to_json(), None)


# ---------------------------------------------------------------------------
# handlers


def cmd_basis_audit(args) -> int:
    report = verify_assumptions(_basis(args), samples=args.samples, seed=args.seed)
    _emit(json.dumps(report.to_dict(), sort_keys=True, indent=2), args.out)
    return 0


def cmd_norm(args) -> int:
    u = lattice_io.read(args.input)
    basis = _basis(args)
    f = InterpolantField.bar(u, basis) if args.kind == "bar" else InterpolantField.tilde(u, basis)
    quad = default_quadrature(f, args.p, args.quad_degree)
    _emit(lp_norm_field(f, args.p, args.k, quad).to_json(), args.out)
    return 0


def cmd_convop_multiplier(args) -> int:
    basis = _basis(args)
    op = build_operator(basis, LatticeDomain.cube(args.dim, args.extent))
    mult = op.full_multiplier()
    lines = []
    header = [f"k{i + 1}" for i in range(args.dim)] + ["multiplier"]
    for idx in np.ndindex(mult.shape):
        lines.append([*idx, repr(float(mult[idx]))])
    _emit_csv(header, lines, args.out)
    return 0


def _emit_csv(header, rows, out):
    fh = open(out, "w", newline="", encoding="utf-8") if out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    finally:
        if out:
            fh.close()


def cmd_convop_kernel(args) -> int:
    basis = _basis(args)
    op = build_operator(basis, LatticeDomain.cube(args.dim, args.extent))
    g = inverse_kernel(op, args.radius, args.box)
    offsets, values = g.as_array()
    payload = {
        "radius": g.radius,
        "box": list(g.box),
        "tail_bound": g.tail_bound,
        "l1_norm": g.l1_norm,
        "offsets": offsets.tolist(),
        "values": values.tolist(),
    }
    _emit(json.dumps(payload, sort_keys=True, indent=2), args.out)
    return 0


def cmd_quasi_dual(args) -> int:
    dual = build_dual(_basis(args))
    res = dual.biorthogonality_residuals()
    payload = {
        "index_set": dual.index_set.tolist(),
        "coefficients": dual.coefficients.tolist(),
        "gram_condition": dual.condition,
        "max_biorthogonality_residual": float(np.max(np.abs(res))),
    }
    _emit(json.dumps(payload, sort_keys=True, indent=2), args.out)
    return 0 if payload["max_biorthogonality_residual"] <= 1e-9 else 1


def cmd_quasi_reproduce(args) -> int:
    q = QuasiInterpolant(build_dual(_basis(args)))
    rows = reproduction_table(q, args.degree, total=not args.per_variable)
    lines = [["/".join(map(str, r["exponents"])), r["degree"], repr(r["residual"])] for r in rows]
    _emit_csv(["exponents", "degree", "residual"], lines, args.out)
    cubic_ok = all(r["residual"] <= 1e-9 for r in rows if r["degree"] <= 3)
    return 0 if cubic_ok else 1


def cmd_study_convergence(args) -> int:
    study = ConvergenceStudy(
        kind=args.kind,
        function=args.function,
        dim=args.dim,
        j=args.j,
        p=args.p,
        basis=args.basis,
        ladder=tuple(args.ladder),
        quad_degree=args.quad_degree,
    )
    report = run_convergence(study)
    _emit_report(report, args.out)
    return 0 if report.passed else 1


def cmd_study_equivalence(args) -> int:
    study = EquivalenceStudy(
        basis=args.basis, dim=args.dim, ps=tuple(args.p), samples=args.samples, extent=args.extent, seed=args.seed
    )
    report = run_equivalence(study)
    _emit_report(report, args.out)
    return 0 if report.passed else 1


def cmd_study_counterexample(args) -> int:
    report = run_counterexample(extent=args.extent, seed=args.seed)
    _emit_report(report, args.out)
    return 0 if report.passed else 1


def cmd_study_smoothness(args) -> int:
    if args.input:
        u = lattice_io.read(args.input)
    else:
        dom = LatticeDomain.cube(args.dim, args.extent)
        u = LatticeFunction.random(dom, np.random.default_rng(args.seed), args.dim if args.A else 1)
    target = u
    if args.A:
        A = np.array(args.A, dtype=float).reshape(u.dim, u.dim)
        target = DeformationField.admissible(A, u)
    report = run_smoothness_measure(target, args.k, args.p, args.basis, site=args.site)
    _emit_report(report, args.out)
    return 0 if report.passed else 1


# ---------------------------------------------------------------------------
# parser


def _common(p: argparse.ArgumentParser, basis_choices=("q1", "p1", "exthat"), default_basis="q1") -> None:
    p.add_argument("--basis", choices=basis_choices, default=default_basis)
    p.add_argument("--dim", type=int, default=1, choices=(1, 2, 3))
    p.add_argument("--out", help="output file (.json or .csv); stdout when omitted")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="latticeinterp", description=__doc__.splitlines()[0])
    groups = parser.add_subparsers(dest="group", required=True)

    g = groups.add_parser("basis", help="nodal basis utilities")
    verbs = g.add_subparsers(dest="verb", required=True)
    p = verbs.add_parser("audit", help="sampled check of the standing assumptions Z1-Z4")
    _common(p)
    p.add_argument("--partition", choices=("crisscross", "kuhn"))
    p.add_argument("--custom", help="JSON file describing a custom basis")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_basis_audit)

    p = groups.add_parser("norm", help="L^p norm of an interpolant of a stored lattice function")
    _common(p)
    p.add_argument("--input", required=True, help="lattice function (.csv or binary)")
    p.add_argument("--kind", choices=("bar", "tilde"), default="bar")
    p.add_argument("--p", type=_p, default=2.0)
    p.add_argument("--k", type=int, default=0)
    p.add_argument("--quad-degree", type=int, default=None)
    p.set_defaults(func=cmd_norm)

    g = groups.add_parser("convop", help="lattice convolution operator")
    verbs = g.add_subparsers(dest="verb", required=True)
    p = verbs.add_parser("multiplier", help="DFT multiplier on the full grid as CSV")
    _common(p)
    p.add_argument("--extent", type=int, default=64)
    p.set_defaults(func=cmd_convop_multiplier)
    p = verbs.add_parser("kernel", help="truncated inverse kernel and its tail bound")
    _common(p)
    p.add_argument("--extent", type=int, default=16)
    p.add_argument("--radius", type=int, default=10)
    p.add_argument("--box", type=int, default=None)
    p.set_defaults(func=cmd_convop_kernel)

    g = groups.add_parser("quasi", help="dual basis and quasi-interpolant")
    verbs = g.add_subparsers(dest="verb", required=True)
    p = verbs.add_parser("dual", help="dual basis coefficients and Gram condition number")
    _common(p, ("q1",))
    p.set_defaults(func=cmd_quasi_dual)
    p = verbs.add_parser("reproduce", help="polynomial reproduction table")
    _common(p, ("q1",))
    p.add_argument("--degree", type=int, default=3)
    p.add_argument("--per-variable", action="store_true", help="use degree per variable instead of total degree")
    p.set_defaults(func=cmd_quasi_reproduce)

    g = groups.add_parser("study", help="experiment harness")
    verbs = g.add_subparsers(dest="verb", required=True)
    p = verbs.add_parser("convergence", help="error ladder and fitted rate")
    _common(p)
    p.add_argument("--kind", choices=("bar", "smooth", "quasi"), default="bar")
    p.add_argument("--function", choices=("sin", "bump", "cubic"), default="sin")
    p.add_argument("--j", type=int, default=0, help="derivative order of the error")
    p.add_argument("--p", type=_p, default=2.0)
    p.add_argument("--ladder", type=int, nargs="+", default=[8, 16, 32, 64])
    p.add_argument("--quad-degree", type=int, default=9)
    p.add_argument("--seed", type=int, default=0, help="accepted for uniformity; the study is deterministic")
    p.set_defaults(func=cmd_study_convergence)

    p = verbs.add_parser("equivalence", help="norm-equivalence constants over a field ensemble")
    _common(p)
    p.add_argument("--p", type=_p, nargs="+", default=[1.0, 2.0, 4.0, math.inf])
    p.add_argument("--samples", type=int, default=300)
    p.add_argument("--extent", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_study_equivalence)

    p = verbs.add_parser("counterexample", help="vanishing interpolant of (-1, 0, 1) under the extended hat")
    p.add_argument("--extent", type=int, default=9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_study_counterexample)

    p = verbs.add_parser("smoothness", help="norm of k-th derivatives of the smooth nodal interpolant")
    _common(p, ("q1", "p1"))
    p.add_argument("--input", help="lattice function file; a random field is used when omitted")
    p.add_argument("--extent", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--p", type=_p, default=2.0)
    p.add_argument("--A", type=float, nargs="+", help="far-field gradient, row-major, for a deformation")
    p.add_argument("--site", type=int, nargs="+", help="split the norm around this site")
    p.set_defaults(func=cmd_study_smoothness)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return int(args.func(args))
    except (InvalidParameterError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ArithmeticError as exc:
        # non-invertible operators and singular Gram matrices
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
