"""Continuous interpolants of lattice functions and their L^p / W^{k,p} norms."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .basis.checks import neighbor_offsets
from .basis.nodal import NodalBasis, UnsupportedOrderError, as_points
from .basis.smoothed import SmoothedBasis, smoothed
from .lattice import InvalidParameterError, LatticeDomain, LatticeFunction, translation_invariant
from .quadrature import CellQuadrature


class Kind(str, enum.Enum):
    BAR = "bar"
    TILDE = "tilde"


@dataclass(frozen=True, eq=False)
class InterpolantField:
    """``sum_xi c(xi) phi(x - xi)`` with ``phi`` the nodal (bar) or smoothed (tilde) basis."""

    coefficients: LatticeFunction
    basis: NodalBasis
    kind: Kind
    shape_function: object = None

    def __post_init__(self):
        kind = Kind(self.kind)
        object.__setattr__(self, "kind", kind)
        if self.shape_function is None:
            sf = self.basis if kind is Kind.BAR else smoothed(self.basis)
            object.__setattr__(self, "shape_function", sf)
        if self.basis.dim != self.coefficients.dim:
            raise InvalidParameterError("basis and lattice function dimensions differ")

    @classmethod
    def bar(cls, u: LatticeFunction, basis: NodalBasis) -> "InterpolantField":
        return cls(u, basis, Kind.BAR)

    @classmethod
    def tilde(cls, u: LatticeFunction, basis: NodalBasis | SmoothedBasis) -> "InterpolantField":
        if isinstance(basis, SmoothedBasis):
            return cls(u, basis.parent, Kind.TILDE, basis)
        return cls(u, basis, Kind.TILDE)

    @property
    def dim(self) -> int:
        return self.coefficients.dim

    @property
    def domain(self) -> LatticeDomain:
        return self.coefficients.domain

    @property
    def max_order(self) -> int:
        return self.shape_function.max_order

    @property
    def support_radius(self) -> float:
        return self.shape_function.support_radius

    def __call__(self, x, order: int = 0):
        return evaluate(self, x, order)


def evaluate(f: InterpolantField, x, order: int = 0) -> np.ndarray:
    """Value (order 0), Jacobian (1) or higher derivative tensor of ``f`` at ``x``.

    ``x`` has shape ``(..., d)``; the result has shape ``(..., m) + (d,) * order``.
    Lattice sites are wrapped periodically.
    """
    if not 0 <= order <= f.max_order:
        raise UnsupportedOrderError(f"{f.kind.value} field supports derivatives up to {f.max_order}")
    d = f.dim
    x = as_points(x, d)
    lead = x.shape[:-1]
    pts = x.reshape(-1, d)
    base = np.floor(pts)
    c = f.coefficients
    out = np.zeros((pts.shape[0], c.components) + (d,) * order)
    for o in neighbor_offsets(d, f.support_radius):
        xi = (base - o).astype(int)
        phi = f.shape_function.derivative(pts - xi, order)
        coef = c(xi)
        out += np.einsum("nm,n...->nm...", coef, phi)
    return out.reshape(lead + out.shape[1:])


def _node_values(f: InterpolantField, nodes: np.ndarray, k: int) -> np.ndarray:
    """``grad^k f`` at ``cell + node`` for every cell; shape ``(*extent, J, m, d**k)``.

    Every cell sees the same shape-function values at the same local nodes,
    so the field is a product of rolled coefficient arrays with one table.
    """
    d = f.dim
    c = f.coefficients.values
    J, m = nodes.shape[0], c.shape[-1]
    rolled, tables = [], []
    for o in neighbor_offsets(d, f.support_radius):
        table = f.shape_function.derivative(nodes + o, k).reshape(J * d**k)
        if not np.any(table):
            continue
        # sites xi = cell - o contribute phi(node + o)
        rolled.append(np.roll(c, shift=tuple(int(s) for s in o), axis=tuple(range(d))))
        tables.append(table)
    cells = c.shape[:-1]
    if not tables:
        return np.zeros(cells + (J, m, d**k))
    R = np.stack(rolled, axis=-1).reshape(-1, len(tables))
    out = (R @ np.stack(tables)).reshape(cells + (m, J, d**k))
    return np.swapaxes(out, -3, -2)


def _field_degree(f: InterpolantField) -> int:
    return 1 if f.kind is Kind.BAR else 3


def default_quadrature(f: InterpolantField, p: float, degree: int | None = None) -> CellQuadrature:
    """Exact for polynomial integrands (``p`` an even integer), order-6 composite otherwise."""
    if degree is not None:
        return f.basis.cell_quadrature(degree)
    deg = _field_degree(f)
    if not math.isinf(p) and float(p).is_integer() and int(p) % 2 == 0:
        return f.basis.cell_quadrature(int(p) * deg)
    return f.basis.cell_quadrature(11, subdivisions=2)


@dataclass
class NormReport:
    kind: str
    p: float
    k: int
    value: float
    quad_degree: int
    cells: int
    domain: tuple

    def to_json(self) -> str:
        out = asdict(self)
        out["p"] = "inf" if math.isinf(self.p) else self.p
        out["domain"] = list(self.domain)
        return json.dumps(out, sort_keys=True)


def _reduce(mag: np.ndarray, weights: np.ndarray, p: float) -> float:
    if math.isinf(p):
        return float(mag.max(initial=0.0))
    scale = float(mag.max(initial=0.0))
    if scale == 0.0:
        return 0.0
    return scale * float(np.sum(weights * (mag / scale) ** p)) ** (1.0 / p)


def _reduce_rows(mag: np.ndarray, weights: np.ndarray, p: float) -> np.ndarray:
    """Row-wise ``_reduce``: one norm per row of ``mag``."""
    if math.isinf(p):
        return mag.max(axis=1, initial=0.0)
    scale = mag.max(axis=1, initial=0.0)
    safe = np.where(scale > 0, scale, 1.0)
    return scale * np.sum(weights * (mag / safe[:, None]) ** p, axis=1) ** (1.0 / p)


def lp_norm_field(
    f: InterpolantField,
    p: float,
    k: int = 0,
    quad: CellQuadrature | None = None,
    target: Callable | None = None,
    cell_mask: np.ndarray | None = None,
) -> NormReport:
    """``|| grad^k f ||_{L^p}`` over the periodic box, summed cell by cell.

    ``target(x)``, if given, is subtracted at the quadrature nodes; it takes
    points of shape ``(n, d)`` and returns ``(n, m) + (d,) * k``. ``cell_mask``
    restricts the sum to a subset of cells. For ``p = inf`` the maximum is
    taken over nodes and cell corners, a lower bound for the true supremum.
    """
    p = float(p)
    if not p >= 1.0:
        raise InvalidParameterError(f"p must be in [1, inf], got {p}")
    if k > f.max_order:
        raise UnsupportedOrderError(f"{f.kind.value} field supports derivatives up to {f.max_order}")
    quad = default_quadrature(f, p) if quad is None else quad
    nodes = quad.with_corners() if math.isinf(p) else quad.nodes
    weights = np.concatenate([quad.weights, np.zeros(len(nodes) - len(quad.weights))])
    vals = _node_values(f, nodes, k)
    d = f.dim
    if target is not None:
        sites = f.domain.sites().astype(float)
        x = (sites[..., None, :] + nodes).reshape(-1, d)
        t = np.asarray(target(x), dtype=float).reshape(vals.shape)
        vals = vals - t
    mag = np.sqrt(np.sum(vals**2, axis=(-2, -1)))
    if cell_mask is not None:
        mag = mag[np.asarray(cell_mask, dtype=bool)]
    mag = mag.reshape(-1, len(nodes))
    w = np.broadcast_to(weights, mag.shape)
    value = _reduce(mag.ravel(), w.ravel(), p)
    return NormReport(f.kind.value, p, k, value, quad.degree, mag.shape[0], f.domain.extent)


def component_norms(
    f: InterpolantField, p: float, k: int = 0, quad: CellQuadrature | None = None
) -> np.ndarray:
    """``|| grad^k f_i ||_{L^p}`` for every component ``i`` separately, shape ``(m,)``.

    Stacking independent scalar fields as components amortises the
    shape-function tables, which dominate the cost for quadrature backends.
    """
    p = float(p)
    if not p >= 1.0:
        raise InvalidParameterError(f"p must be in [1, inf], got {p}")
    if k > f.max_order:
        raise UnsupportedOrderError(f"{f.kind.value} field supports derivatives up to {f.max_order}")
    quad = default_quadrature(f, p) if quad is None else quad
    nodes = quad.with_corners() if math.isinf(p) else quad.nodes
    weights = np.concatenate([quad.weights, np.zeros(len(nodes) - len(quad.weights))])
    c = f.coefficients
    m = c.components
    chunk = max(1, int(2e7 // (c.domain.size * len(nodes) * f.dim**k)))
    out = []
    for start in range(0, m, chunk):
        part = LatticeFunction(c.domain, c.values[..., start : start + chunk])
        sub = InterpolantField(part, f.basis, f.kind, f.shape_function)
        mag = np.sqrt(np.sum(_node_values(sub, nodes, k) ** 2, axis=-1))
        mag = np.moveaxis(mag, -1, 0).reshape(mag.shape[-1], -1)
        out.append(_reduce_rows(mag, np.tile(weights, c.domain.size), p))
    return np.concatenate(out)


def cell_norms(f: InterpolantField, p: float, k: int = 0, quad: CellQuadrature | None = None) -> np.ndarray:
    """``|| grad^k f ||_{L^p(Q)}`` for every unit cell ``Q``, shape ``extent``."""
    p = float(p)
    if not p >= 1.0:
        raise InvalidParameterError(f"p must be in [1, inf], got {p}")
    quad = default_quadrature(f, p) if quad is None else quad
    nodes = quad.with_corners() if math.isinf(p) else quad.nodes
    mag = np.sqrt(np.sum(_node_values(f, nodes, k) ** 2, axis=(-2, -1)))
    if math.isinf(p):
        return mag.max(axis=-1)
    return np.sum(quad.weights * mag**p, axis=-1) ** (1.0 / p)


def sobolev_norm(u: LatticeFunction, basis: NodalBasis, p: float, quad: CellQuadrature | None = None) -> NormReport:
    """``|| u_bar ||_{W^{1,p}}``."""
    f = InterpolantField.bar(u, basis)
    n0 = lp_norm_field(f, p, 0, quad)
    n1 = lp_norm_field(f, p, 1, quad)
    if math.isinf(p):
        value = max(n0.value, n1.value)
    else:
        value = (n0.value**p + n1.value**p) ** (1.0 / p)
    return NormReport("bar", float(p), 1, value, n0.quad_degree, n0.cells, u.domain.extent)


@translation_invariant
def gradient_seminorm(u: LatticeFunction, basis: NodalBasis, p: float, quad: CellQuadrature | None = None) -> float:
    """Homogeneous discrete Sobolev seminorm ``|| grad u_bar ||_{L^p}``."""
    return lp_norm_field(InterpolantField.bar(u, basis), p, 1, quad).value


def sample_to_lattice(v: Callable, domain: LatticeDomain, h: float = 1.0) -> LatticeFunction:
    """``u(xi) = v(h xi)`` on the canonical sites of ``domain``."""
    x = h * domain.sites().astype(float)
    vals = np.asarray(v(x.reshape(-1, domain.dim)), dtype=float)
    vals = vals.reshape(domain.extent + (-1,))
    if not np.all(np.isfinite(vals)):
        raise InvalidParameterError("sampled function is not finite on the lattice")
    return LatticeFunction(domain, vals)
