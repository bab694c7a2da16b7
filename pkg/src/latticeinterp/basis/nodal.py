"""Nodal basis functions: Q1 hat, P1 on a simplicial partition, the extended hat."""

from __future__ import annotations

import enum
import itertools
import json
import math
from pathlib import Path

import numpy as np

from ..quadrature import CellQuadrature, cell_quadrature, simplicial_cell_quadrature
from .partition import SimplicialPartition, default_partition
from .pieces import AffinePiece, BoxPiece


class Flavor(str, enum.Enum):
    Q1 = "q1"
    P1 = "p1"
    EXTENDED_HAT = "exthat"
    CUSTOM = "custom"


class BasisConstructionError(ValueError):
    """A nodal basis could not be built from the given data."""


def as_points(x, d: int) -> np.ndarray:
    """Coerce ``x`` to shape ``(..., d)``; in 1D a bare array is a list of points."""
    x = np.asarray(x, dtype=float)
    if d == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    if x.shape[-1] != d:
        raise ValueError(f"points must have trailing dimension {d}, got shape {x.shape}")
    return x


def _hat(t):
    return np.maximum(0.0, 1.0 - np.abs(t))


def _dhat(t):
    # left limit at the breakpoints (lexicographically smaller cell)
    return np.where((t > -1.0) & (t <= 0.0), 1.0, np.where((t > 0.0) & (t <= 1.0), -1.0, 0.0))


class NodalBasis:
    """Base class for the nodal function associated with the origin.

    Subclasses provide ``value`` and ``gradient`` on arrays of shape
    ``(..., d)`` and a piecewise-polynomial description (``pieces``) used by
    the exact convolution backend.
    """

    flavor: Flavor
    dim: int
    support_radius: float
    lipschitz: float
    #: whether the construction intends the Kronecker property at lattice sites
    nodal: bool = True

    def value(self, x) -> np.ndarray:
        raise NotImplementedError

    def gradient(self, x) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x) -> np.ndarray:
        return self.value(x)

    def derivative(self, x, order: int) -> np.ndarray:
        if order == 0:
            return self.value(x)
        if order == 1:
            return self.gradient(x)
        raise UnsupportedOrderError(f"nodal basis is only Lipschitz; order {order} requested")

    @property
    def max_order(self) -> int:
        return 1

    def pieces(self) -> list:
        raise NotImplementedError

    def cell_quadrature(self, degree: int, subdivisions: int = 1) -> CellQuadrature:
        """Rule on ``[0,1]^d`` that is exact piecewise on this basis's mesh."""
        return cell_quadrature(self.dim, degree, subdivisions)

    def __repr__(self):
        return f"{type(self).__name__}(d={self.dim}, flavor={self.flavor.value})"


class UnsupportedOrderError(ValueError):
    """Requested derivative order exceeds the available regularity."""


class Q1Basis(NodalBasis):
    """Tensor-product hat ``prod_i max(0, 1 - |x_i|)``."""

    flavor = Flavor.Q1
    support_radius = 1.0

    def __init__(self, d: int):
        if d not in (1, 2, 3):
            raise BasisConstructionError(f"d must be 1, 2 or 3, got {d}")
        self.dim = d
        self.lipschitz = math.sqrt(d)

    def value(self, x):
        x = as_points(x, self.dim)
        return np.prod(_hat(x), axis=-1)

    def gradient(self, x):
        x = as_points(x, self.dim)
        h = _hat(x)
        dh = _dhat(x)
        out = np.empty(x.shape)
        for j in range(self.dim):
            out[..., j] = dh[..., j] * np.prod(np.delete(h, j, axis=-1), axis=-1)
        return out

    def pieces(self):
        out = []
        for cell in itertools.product((-1, 0), repeat=self.dim):
            factors = [[1.0, 1.0] if c == -1 else [1.0, -1.0] for c in cell]
            lo = np.array(cell, dtype=float)
            out.append(BoxPiece(lo, lo + 1.0, factors))
        return out


class PiecewiseBasis(NodalBasis):
    """Basis described entirely by polynomial pieces (P1, extended hat, custom)."""

    def __init__(self, dim: int, pieces, flavor: Flavor, nodal: bool = True, quad_simplices=None):
        self.dim = dim
        self.flavor = flavor
        self.nodal = nodal
        # lexicographic order of the cell holding each piece decides ties
        self._pieces = sorted(pieces, key=lambda p: (tuple(np.floor(p.lo + 1e-9)), tuple(p.lo)))
        lo = np.min([p.lo for p in self._pieces], axis=0)
        hi = np.max([p.hi for p in self._pieces], axis=0)
        self.support_radius = float(max(np.max(np.abs(lo)), np.max(np.abs(hi))))
        self.lipschitz = self._lipschitz()
        self._quad_simplices = quad_simplices

    def _lipschitz(self) -> float:
        best = 0.0
        for p in self._pieces:
            if isinstance(p, AffinePiece):
                best = max(best, float(np.linalg.norm(p.g)))
            else:
                t = np.linspace(0.0, 1.0, 1001)[:, None]
                pts = p.lo + t * (p.hi - p.lo)
                best = max(best, float(np.max(np.linalg.norm(p.grad(pts), axis=-1))))
        return best

    def pieces(self):
        return list(self._pieces)

    def _locate(self, y):
        owner = np.full(y.shape[0], -1)
        inside = np.all(np.abs(y) <= self.support_radius + 1e-12, axis=-1)
        for k, p in enumerate(self._pieces):
            free = inside & (owner < 0)
            if not free.any():
                break
            hit = np.zeros_like(free)
            hit[free] = p.contains(y[free])
            owner[hit] = k
        return owner

    def value(self, x):
        x = as_points(x, self.dim)
        y = x.reshape(-1, self.dim)
        owner = self._locate(y)
        out = np.zeros(y.shape[0])
        for k, p in enumerate(self._pieces):
            m = owner == k
            if m.any():
                out[m] = p.value(y[m])
        return out.reshape(x.shape[:-1])

    def gradient(self, x):
        x = as_points(x, self.dim)
        y = x.reshape(-1, self.dim)
        owner = self._locate(y)
        out = np.zeros(y.shape)
        for k, p in enumerate(self._pieces):
            m = owner == k
            if m.any():
                out[m] = p.grad(y[m])
        return out.reshape(x.shape)

    def cell_quadrature(self, degree: int, subdivisions: int = 1) -> CellQuadrature:
        if self._quad_simplices is not None and subdivisions == 1:
            return simplicial_cell_quadrature(self._quad_simplices, degree)
        if self.dim == 1:
            return _interval_quadrature(self._pieces, degree, subdivisions)
        return super().cell_quadrature(degree, subdivisions)


def _interval_quadrature(pieces, degree, subdivisions):
    breaks = {0.0, 1.0}
    for p in pieces:
        for b in (p.lo[0], p.hi[0]):
            frac = b - math.floor(b)
            breaks.add(round(frac, 12))
    for k in range(1, subdivisions):
        breaks.add(k / subdivisions)
    edges = np.array(sorted(breaks))
    simplices = [[[a], [b]] for a, b in zip(edges[:-1], edges[1:]) if b - a > 1e-12]
    rule = simplicial_cell_quadrature(simplices, degree)
    return CellQuadrature(rule.nodes, rule.weights, rule.degree, subdivisions)


def make_q1(d: int) -> Q1Basis:
    return Q1Basis(d)


def make_p1(d: int, partition: SimplicialPartition | None = None) -> PiecewiseBasis:
    """Continuous piecewise-linear nodal basis on a periodic simplicial partition.

    Partition vertices that are not lattice points (e.g. cell centers) take
    the multilinear average of the surrounding lattice values, so the basis
    stays nodal on ``Z^d`` and reproduces affine functions.
    """
    partition = default_partition(d) if partition is None else partition
    if partition.dim != d:
        raise BasisConstructionError(f"partition has dimension {partition.dim}, expected {d}")
    problems = partition.check()
    if problems:
        raise BasisConstructionError("invalid partition: " + "; ".join(problems))
    pieces = []
    for cell in itertools.product((-1, 0), repeat=d):
        shift = np.array(cell, dtype=float)
        for simplex in partition.simplices:
            verts = simplex + shift
            vals = np.prod(_hat(verts), axis=-1)
            if np.all(vals == 0.0):
                continue
            try:
                pieces.append(AffinePiece.from_vertex_values(verts, vals))
            except (ValueError, np.linalg.LinAlgError) as err:
                raise BasisConstructionError(f"degenerate simplex {verts.tolist()}") from err
    if d == 1:
        pieces = [BoxPiece(p.lo, p.hi, [[p.a, p.g[0]]]) for p in pieces]
    basis = PiecewiseBasis(d, pieces, Flavor.P1, quad_simplices=partition.simplices if d > 1 else None)
    basis.partition = partition
    return basis


def make_extended_hat() -> PiecewiseBasis:
    """1D trapezoid: 1/3 on [-1, 1], linear to 0 at +-2. Fails the Kronecker property."""
    third = 1.0 / 3.0
    pieces = [
        BoxPiece([-2.0], [-1.0], [[2 * third, third]]),
        BoxPiece([-1.0], [0.0], [[third]]),
        BoxPiece([0.0], [1.0], [[third]]),
        BoxPiece([1.0], [2.0], [[2 * third, -third]]),
    ]
    return PiecewiseBasis(1, pieces, Flavor.EXTENDED_HAT, nodal=False)


def load_custom(path) -> PiecewiseBasis:
    """Load a custom basis from JSON.

    1D: ``{"dim": 1, "breakpoints": [x0, ..., xn], "coefficients": [[c0, c1, ...], ...]}``
    with one power-basis polynomial in ``x`` per interval.

    d-D: ``{"dim": d, "simplices": [[[...], ...], ...], "affine": [[a, g1, ..., gd], ...]}``
    with ``a + g.x`` on each simplex.
    """
    desc = json.loads(Path(path).read_text())
    return custom_from_dict(desc)


def custom_from_dict(desc: dict) -> PiecewiseBasis:
    d = int(desc["dim"])
    pieces = []
    if "breakpoints" in desc:
        if d != 1:
            raise BasisConstructionError("breakpoint format is one-dimensional")
        bp = np.asarray(desc["breakpoints"], dtype=float)
        coefs = desc["coefficients"]
        if len(coefs) != len(bp) - 1 or np.any(np.diff(bp) <= 0):
            raise BasisConstructionError("need increasing breakpoints and one polynomial per interval")
        for a, b, c in zip(bp[:-1], bp[1:], coefs):
            pieces.append(BoxPiece([a], [b], [c]))
    elif "simplices" in desc:
        for verts, coef in zip(desc["simplices"], desc["affine"]):
            try:
                pieces.append(AffinePiece(verts, coef[0], coef[1:]))
            except (ValueError, np.linalg.LinAlgError) as err:
                raise BasisConstructionError(f"degenerate simplex {verts}") from err
    else:
        raise BasisConstructionError("custom basis needs 'breakpoints' or 'simplices'")
    basis = PiecewiseBasis(d, pieces, Flavor.CUSTOM)
    lattice = [np.array(xi, dtype=float) for xi in itertools.product(range(-3, 4), repeat=d)]
    vals = basis.value(np.array(lattice))
    expected = np.array([1.0 if not np.any(xi) else 0.0 for xi in lattice])
    basis.nodal = bool(np.max(np.abs(vals - expected)) <= 1e-14)
    return basis


def make_basis(name: str, d: int = 1) -> NodalBasis:
    """Factory used by the CLI: ``q1``, ``p1``, ``exthat``."""
    name = name.lower()
    if name == "q1":
        return make_q1(d)
    if name == "p1":
        return make_p1(d)
    if name in ("exthat", "extended_hat", "extendedhat"):
        if d != 1:
            raise BasisConstructionError("the extended hat is one-dimensional")
        return make_extended_hat()
    raise BasisConstructionError(f"unknown basis {name!r}")


def support_set(basis, xi=None) -> tuple[np.ndarray, np.ndarray]:
    """Bounding box ``xi + [-r, r]^d`` of the shifted support."""
    d = basis.dim
    xi = np.zeros(d) if xi is None else np.atleast_1d(np.asarray(xi, dtype=float))
    r = basis.support_radius
    return xi - r, xi + r
