"""Gauss rules on unit cells and simplices."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre


@lru_cache(maxsize=None)
def _gauss_unit(n: int) -> tuple[np.ndarray, np.ndarray]:
    t, w = roots_legendre(n)
    return 0.5 * (t + 1.0), 0.5 * w


def gauss_legendre(n: int, a: float = 0.0, b: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """``n``-point Gauss-Legendre nodes and weights on ``[a, b]``."""
    if n < 1:
        raise ValueError("need at least one quadrature point")
    x, w = _gauss_unit(n)
    return a + (b - a) * x, (b - a) * w


def points_for_degree(degree: int) -> int:
    """Smallest Gauss-Legendre order integrating polynomials of ``degree`` exactly."""
    return max(1, (int(degree) + 2) // 2)


def tensor_rule(lo, hi, n: int | tuple[int, ...]) -> tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss rule on the box ``[lo, hi]``; ``n`` points per axis."""
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    d = lo.size
    ns = (n,) * d if np.isscalar(n) else tuple(n)
    rules = [gauss_legendre(ns[i], lo[i], hi[i]) for i in range(d)]
    nodes = np.stack(np.meshgrid(*[r[0] for r in rules], indexing="ij"), axis=-1).reshape(-1, d)
    weights = np.ones(nodes.shape[0])
    for i, grid in enumerate(np.meshgrid(*[r[1] for r in rules], indexing="ij")):
        weights = weights * grid.ravel()
    return nodes, weights


@lru_cache(maxsize=None)
def _collapsed_reference(d: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    # Duffy map of [0,1]^d onto the reference simplex; the Jacobian factors
    # (1-u_i)^(d-1-i) are absorbed into Gauss-Jacobi weights.
    axes = []
    for i in range(d):
        a = d - 1 - i
        t, w = roots_jacobi(n, a, 0)
        axes.append((0.5 * (t + 1.0), w / 2.0 ** (a + 1)))
    lam = np.zeros((n**d, d))
    weights = np.ones(n**d)
    for row, idx in enumerate(itertools.product(range(n), repeat=d)):
        remaining = 1.0
        for i, j in enumerate(idx):
            u, w = axes[i][0][j], axes[i][1][j]
            lam[row, i] = remaining * u
            remaining *= 1.0 - u
            weights[row] *= w
    return lam, weights


def simplex_rule(vertices, degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Collapsed Gauss rule on the simplex with the given ``(d+1, d)`` vertices.

    Exact for polynomials of total degree ``degree``.
    """
    v = np.asarray(vertices, dtype=float)
    d = v.shape[1]
    lam, w = _collapsed_reference(d, points_for_degree(degree))
    edges = v[1:] - v[0]
    vol = abs(np.linalg.det(edges)) if d > 0 else 1.0
    return v[0] + lam @ edges, w * vol


@dataclass(frozen=True)
class CellQuadrature:
    """Quadrature rule on the unit cell ``[0, 1]^d``.

    ``degree`` is the per-axis polynomial degree integrated exactly on every
    piece of the rule (tensor rules) or the total degree (simplicial rules).
    ``subdivisions`` records how many sub-cells per axis the rule uses.
    """

    nodes: np.ndarray
    weights: np.ndarray
    degree: int
    subdivisions: int = 1

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    def with_corners(self, inset: float = 1e-9) -> np.ndarray:
        """Nodes plus the cell corners, used for sampled sup-norms.

        Corners are moved ``inset`` into the cell so that piecewise-smooth
        derivatives are read from the cell itself rather than a neighbour.
        """
        corners = np.array(list(itertools.product((inset, 1.0 - inset), repeat=self.dim)))
        return np.vstack([self.nodes, corners])


def cell_quadrature(d: int, degree: int, subdivisions: int = 1) -> CellQuadrature:
    """Composite tensor Gauss rule on ``[0,1]^d`` exact to per-axis ``degree``."""
    n = points_for_degree(degree)
    s = int(subdivisions)
    nodes, weights = [], []
    for corner in itertools.product(range(s), repeat=d):
        lo = np.array(corner, dtype=float) / s
        x, w = tensor_rule(lo, lo + 1.0 / s, n)
        nodes.append(x)
        weights.append(w)
    return CellQuadrature(np.vstack(nodes), np.concatenate(weights), 2 * n - 1, s)


def simplicial_cell_quadrature(simplices, degree: int) -> CellQuadrature:
    """Union of simplex rules over a tiling of the unit cell."""
    nodes, weights = [], []
    for simplex in simplices:
        x, w = simplex_rule(simplex, degree)
        nodes.append(x)
        weights.append(w)
    return CellQuadrature(np.vstack(nodes), np.concatenate(weights), 2 * points_for_degree(degree) - 1)
