"""Bi-orthogonal dual basis, the Clement-type quasi-interpolant, and cubic reproduction."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .basis.checks import lattice_sum
from .basis.nodal import NodalBasis, as_points
from .basis.smoothed import AnalyticTensorCubic, SmoothedBasis, bspline3, smoothed
from .interp import InterpolantField, Kind
from .lattice import InvalidParameterError, LatticeDomain, LatticeFunction
from .quadrature import tensor_rule

#: Gram matrices with a larger 2-norm condition number are rejected
GRAM_CONDITION_LIMIT = 1e12


class DualConstructionError(ArithmeticError):
    """The restricted Gram matrix is numerically singular."""


@dataclass(frozen=True)
class Polynomial:
    """Polynomial ``sum_alpha c_alpha x^alpha`` in ``d`` variables.

    ``terms`` maps exponent tuples to coefficients, e.g. ``{(3, 0): 1.0}`` is ``x_1^3``.
    """

    terms: dict
    dim: int

    @classmethod
    def monomial(cls, exponents, coef: float = 1.0) -> "Polynomial":
        exponents = tuple(int(e) for e in exponents)
        return cls({exponents: float(coef)}, len(exponents))

    @classmethod
    def affine(cls, a: float, b) -> "Polynomial":
        b = np.atleast_1d(np.asarray(b, dtype=float))
        d = b.size
        terms = {(0,) * d: float(a)}
        for i, bi in enumerate(b):
            terms[tuple(int(j == i) for j in range(d))] = float(bi)
        return cls(terms, d)

    @property
    def degree(self) -> int:
        return max((sum(e) for e, c in self.terms.items() if c != 0.0), default=0)

    def __call__(self, x) -> np.ndarray:
        return self.derivative(x, 0)

    def derivative(self, x, order: int = 0) -> np.ndarray:
        """``grad^order p`` at ``x``, shape ``x.shape[:-1] + (d,) * order``."""
        d = self.dim
        x = as_points(x, d)
        out = np.zeros(x.shape[:-1] + (d,) * order)
        for idx in itertools.product(range(d), repeat=order):
            counts = np.bincount(np.array(idx, dtype=int), minlength=d) if order else np.zeros(d, int)
            val = np.zeros(x.shape[:-1])
            for exps, c in self.terms.items():
                if any(e < k for e, k in zip(exps, counts)):
                    continue
                term = np.full(x.shape[:-1], float(c))
                for i, (e, k) in enumerate(zip(exps, counts)):
                    term = term * math.perm(e, k) * x[..., i] ** (e - k)
                val = val + term
            out[(Ellipsis,) + idx] = val
        return out

    def __add__(self, other: "Polynomial") -> "Polynomial":
        terms = dict(self.terms)
        for e, c in other.terms.items():
            terms[e] = terms.get(e, 0.0) + c
        return Polynomial(terms, self.dim)


def monomials(d: int, max_degree: int, total: bool = True) -> list[Polynomial]:
    """Monomials of total degree (or per-variable degree when ``total=False``) up to ``max_degree``."""
    out = []
    for exps in itertools.product(range(max_degree + 1), repeat=d):
        if not total or sum(exps) <= max_degree:
            out.append(Polynomial.monomial(exps))
    return out


def _unit_cells(lo: int, hi: int, d: int) -> np.ndarray:
    return np.array(list(itertools.product(range(lo, hi), repeat=d)), dtype=float)


def _box_rule(radius: int, d: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss rule on ``[-radius, radius]^d`` split into unit cells."""
    ref_x, ref_w = tensor_rule(np.zeros(d), np.ones(d), n)
    cells = _unit_cells(-radius, radius, d)
    nodes = (cells[:, None, :] + ref_x[None]).reshape(-1, d)
    return nodes, np.tile(ref_w, len(cells))


@dataclass(frozen=True, eq=False)
class DualBasis:
    """``zeta*(x) = sum_{xi in X} a_xi zeta_tilde(x - xi)`` on ``omega_0``, zero outside."""

    parent: SmoothedBasis
    index_set: np.ndarray
    coefficients: np.ndarray
    gram: np.ndarray
    condition: float
    factor: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.parent.dim

    @property
    def support_radius(self) -> float:
        return self.parent.support_radius

    def coefficient(self, xi) -> float:
        hit = np.all(self.index_set == np.asarray(xi), axis=1)
        return float(self.coefficients[hit][0]) if hit.any() else 0.0

    def value(self, x) -> np.ndarray:
        x = as_points(x, self.dim)
        pts = x.reshape(-1, self.dim)
        if self.factor is not None:
            R = len(self.factor) // 2
            out = np.ones(pts.shape[0])
            for i in range(self.dim):
                t = pts[:, i]
                out *= sum(a * bspline3(t - o) for o, a in zip(range(-R, R + 1), self.factor))
        else:
            out = np.zeros(pts.shape[0])
            for xi, a in zip(self.index_set, self.coefficients):
                out += a * self.parent.value(pts - xi)
        out[np.any(np.abs(pts) > self.support_radius, axis=-1)] = 0.0
        return out.reshape(x.shape[:-1])

    __call__ = value

    def biorthogonality_residuals(self, points_per_axis: int = 6) -> np.ndarray:
        """``int zeta*(x) zeta_tilde(x - xi) dx - delta_{xi,0}`` for every ``xi`` in ``X``.

        Uses its own composite rule, independent of the one used for assembly.
        """
        R = int(self.support_radius)
        nodes, w = _box_rule(R, self.dim, points_per_axis)
        star = self.value(nodes)
        res = np.empty(len(self.index_set))
        for i, xi in enumerate(self.index_set):
            res[i] = np.sum(w * star * self.parent.value(nodes - xi)) - float(not np.any(xi))
        return res

    def lp_norm(self, p: float, points_per_axis: int = 6) -> float:
        R = int(self.support_radius)
        nodes, w = _box_rule(R, self.dim, points_per_axis)
        vals = np.abs(self.value(nodes))
        if math.isinf(p):
            return float(vals.max())
        return float(np.sum(w * vals**p) ** (1.0 / p))


def _solve_gram(gram: np.ndarray, rhs: np.ndarray) -> tuple[np.ndarray, float]:
    U, s, Vt = np.linalg.svd(gram)
    cond = float(s[0] / s[-1]) if s[-1] > 0 else math.inf
    if cond > GRAM_CONDITION_LIMIT:
        raise DualConstructionError(f"Gram matrix condition number {cond:.3e} exceeds {GRAM_CONDITION_LIMIT:g}")
    return Vt.T @ ((U.T @ rhs) / s), cond


def _gram(sb: SmoothedBasis, X: np.ndarray, R: int) -> np.ndarray:
    # piecewise degree 6 per axis on unit cells: 4 Gauss points are exact
    nodes, w = _box_rule(R, sb.dim, 4)
    phi = np.stack([sb.value(nodes - xi) for xi in X])
    gram = (phi * w) @ phi.T
    return 0.5 * (gram + gram.T)


def build_dual(sb: SmoothedBasis | NodalBasis) -> DualBasis:
    """Solve ``G a = e_0`` with ``G`` the Gram matrix of the shifted smoothed basis restricted to ``omega_0``.

    The tensor-product cubic has ``G = G_1 (x) ... (x) G_1``, so the system is
    solved through the one-dimensional factor and ``a`` is the tensor power of
    the 1D solution. The reported condition number is that of the full ``G``.
    """
    if isinstance(sb, NodalBasis):
        sb = smoothed(sb)
    if not isinstance(sb, AnalyticTensorCubic):
        raise InvalidParameterError("the dual basis is built for the analytic (Q1) smoothed basis only")
    d = sb.dim
    R = int(round(sb.support_radius))
    offsets = np.arange(-2 * R + 1, 2 * R)
    sb1 = smoothed(type(sb.parent)(1)) if d > 1 else sb
    gram1 = _gram(sb1, offsets[:, None].astype(float), R)
    a1, cond1 = _solve_gram(gram1, (offsets == 0).astype(float))
    X = np.array(list(itertools.product(offsets, repeat=d)), dtype=int)
    gram, a = gram1, a1
    for _ in range(d - 1):
        gram, a = np.kron(gram, gram1), np.kron(a, a1)
    cond = cond1**d
    if cond > GRAM_CONDITION_LIMIT:
        raise DualConstructionError(f"Gram matrix condition number {cond:.3e} exceeds {GRAM_CONDITION_LIMIT:g}")
    return DualBasis(sb, X, a, gram, cond, a1)


@dataclass(frozen=True, eq=False)
class QuasiInterpolant:
    """Coefficient functionals ``c(xi) = int zeta*(x - xi) v(x) dx`` by composite Gauss."""

    dual: DualBasis
    points_per_axis: int = 5
    _rule: tuple = field(init=False, repr=False)

    def __post_init__(self):
        R = int(self.dual.support_radius)
        nodes, w = _box_rule(R, self.dual.dim, self.points_per_axis)
        kernel = w * self.dual.value(nodes)
        object.__setattr__(self, "_rule", (nodes, kernel))

    @property
    def degree(self) -> int:
        return 2 * self.points_per_axis - 1

    def coefficients(self, v: Callable, sites: np.ndarray, h: float = 1.0, chunk: int = 512) -> np.ndarray:
        """``c(xi)`` at the given sites (unit-lattice coordinates) for ``v`` sampled at ``h x``."""
        nodes, kernel = self._rule
        sites = np.asarray(sites, dtype=float).reshape(-1, self.dual.dim)
        out = []
        for start in range(0, len(sites), chunk):
            block = sites[start : start + chunk]
            x = (block[:, None, :] + nodes[None]).reshape(-1, self.dual.dim)
            vals = np.asarray(v(h * x), dtype=float)
            vals = vals.reshape(len(block), len(nodes), -1)
            out.append(np.einsum("j,sjm->sm", kernel, vals))
        return np.concatenate(out)


def apply_quasi(q: QuasiInterpolant, v: Callable, domain: LatticeDomain, h: float = 1.0) -> InterpolantField:
    """Tilde field with coefficients ``(zeta* * v_h)(xi)`` at the canonical sites of ``domain``.

    ``v`` takes physical points ``(n, d)``; the field lives on the unit lattice
    and approximates ``x -> v(h x)``. Sites are not wrapped when sampling ``v``.
    """
    sites = domain.sites().reshape(-1, domain.dim)
    c = q.coefficients(v, sites, h)
    coef = LatticeFunction(domain, c.reshape(domain.extent + (-1,)))
    return InterpolantField(coef, q.dual.parent.parent, Kind.TILDE, q.dual.parent)


def _affine_fit(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    lhs = np.hstack([np.ones((len(x), 1)), x])
    coef, *_ = np.linalg.lstsq(lhs, y, rcond=None)
    return coef, float(np.max(np.abs(lhs @ coef - y)))


def _window_grid(lo, hi, n: int, d: int) -> np.ndarray:
    axes = [np.linspace(lo, hi, n)] * d
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)


def cubic_preimage(
    p: Polynomial,
    basis: NodalBasis | SmoothedBasis,
    domain: LatticeDomain,
    tol: float = 1e-9,
) -> LatticeFunction:
    """Lattice function ``w`` whose tilde field equals ``p`` away from the seam.

    ``sum_xi p(xi) zeta_tilde(x - xi) - p(x)`` is affine for cubic ``p``; it is
    fitted on a sample window and subtracted from the nodal values of ``p``.
    """
    if p.degree > 3:
        raise InvalidParameterError(f"degree {p.degree} > 3 has no lattice preimage")
    sb = basis if isinstance(basis, SmoothedBasis) else smoothed(basis)
    d = sb.dim
    x = _window_grid(0.0, 1.0, 4, d)
    F = lattice_sum(sb.value, x, p, sb.support_radius) - p(x)
    coef, residual = _affine_fit(x, F)
    if residual > max(tol, 10 * sb.tolerance):
        raise ArithmeticError(f"smoothing defect of p is not affine (residual {residual:.3e})")
    sites = domain.sites().astype(float).reshape(-1, d)
    w = p(sites) - (coef[0] + sites @ coef[1:])
    return LatticeFunction(domain, w.reshape(domain.extent))


@dataclass
class AffinityResult:
    residual: float
    max_abs: float
    affine_coefficients: np.ndarray


def two_basis_difference_check(
    b1: NodalBasis | SmoothedBasis,
    b2: NodalBasis | SmoothedBasis,
    p: Polynomial,
    window=(0.0, 1.0),
    points_per_axis: int = 5,
) -> AffinityResult:
    """Max deviation of ``sum_xi p(xi) (zt2 - zt1)(x - xi)`` from its best affine fit on the window."""
    s1 = b1 if isinstance(b1, SmoothedBasis) else smoothed(b1)
    s2 = b2 if isinstance(b2, SmoothedBasis) else smoothed(b2)
    d = s1.dim
    x = _window_grid(window[0], window[1], points_per_axis, d)
    r = max(s1.support_radius, s2.support_radius)
    F = lattice_sum(lambda y: s2.value(y) - s1.value(y), x, p, r)
    coef, residual = _affine_fit(x, F)
    return AffinityResult(residual, float(np.max(np.abs(F))), coef)


def reproduction_table(
    q: QuasiInterpolant, max_degree: int = 3, total: bool = True, extent: int | None = None, seed: int = 0
) -> list[dict]:
    """Max ``|J v - v|`` on interior points for every monomial up to ``max_degree``.

    Monomials are centred on the box; the window keeps every contributing site
    away from the periodic seam.
    """
    d = q.dual.dim
    extent = extent or (16 if d < 3 else 8)
    domain = LatticeDomain.cube(d, extent)
    R = int(q.dual.support_radius)
    rng = np.random.default_rng(seed)
    x = rng.uniform(R, extent - R, size=(200, d))
    rows = []
    center = extent / 2.0
    for mono in monomials(d, max_degree, total):
        # centred monomials keep magnitudes O(1) so the residual is not dominated by scale
        shifted = lambda y, mono=mono: mono(y - center)
        f = apply_quasi(q, shifted, domain)
        err = np.max(np.abs(f(x)[:, 0] - shifted(x)))
        exps = next(iter(mono.terms))
        rows.append({"exponents": list(exps), "degree": sum(exps), "residual": float(err)})
    return rows
