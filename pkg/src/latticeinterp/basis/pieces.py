"""Polynomial pieces on boxes and simplices, and exact overlay quadrature.

A piecewise-polynomial basis function is a list of pieces. The convolution of
two such functions is integrated exactly by intersecting every piece of one
with every (reflected, shifted) piece of the other and applying a Gauss rule
of sufficient degree on the intersection.
"""

from __future__ import annotations

import itertools

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.spatial import Delaunay, QhullError

from ..quadrature import _collapsed_reference, points_for_degree, tensor_rule

_EPS = 1e-12


class BoxPiece:
    """Separable polynomial ``prod_i p_i(y_i)`` on the box ``[lo, hi]``."""

    is_box = True

    def __init__(self, lo, hi, factors):
        self.lo = np.atleast_1d(np.asarray(lo, dtype=float))
        self.hi = np.atleast_1d(np.asarray(hi, dtype=float))
        self.factors = [np.atleast_1d(np.asarray(f, dtype=float)) for f in factors]
        self._dfactors = [P.polyder(f) if f.size > 1 else np.zeros(1) for f in self.factors]
        self.dim = self.lo.size
        self.axis_degree = max(f.size - 1 for f in self.factors)
        self.degree = sum(f.size - 1 for f in self.factors)

    @property
    def vertices(self) -> np.ndarray:
        return np.array(list(itertools.product(*zip(self.lo, self.hi))))

    def halfspaces(self) -> tuple[np.ndarray, np.ndarray]:
        eye = np.eye(self.dim)
        return np.vstack([eye, -eye]), np.concatenate([self.hi, -self.lo])

    def polygon(self) -> list[tuple[float, float]]:
        (x0, y0), (x1, y1) = self.lo, self.hi
        return [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]

    def contains(self, y, tol=_EPS) -> np.ndarray:
        return np.all((y >= self.lo - tol) & (y <= self.hi + tol), axis=-1)

    def value(self, y) -> np.ndarray:
        out = np.ones(y.shape[:-1])
        for i, f in enumerate(self.factors):
            out = out * P.polyval(y[..., i], f)
        return out

    def grad(self, y) -> np.ndarray:
        vals = [P.polyval(y[..., i], f) for i, f in enumerate(self.factors)]
        ders = [P.polyval(y[..., i], f) for i, f in enumerate(self._dfactors)]
        out = np.empty(y.shape[:-1] + (self.dim,))
        for j in range(self.dim):
            g = ders[j]
            for i in range(self.dim):
                if i != j:
                    g = g * vals[i]
            out[..., j] = g
        return out


class AffinePiece:
    """Affine function ``a + g.y`` on a non-degenerate simplex."""

    is_box = False
    degree = 1
    axis_degree = 1

    def __init__(self, vertices, a: float, g):
        self.vertices_ = np.asarray(vertices, dtype=float)
        self.dim = self.vertices_.shape[1]
        self.a = float(a)
        self.g = np.asarray(g, dtype=float).reshape(self.dim)
        self.lo = self.vertices_.min(axis=0)
        self.hi = self.vertices_.max(axis=0)
        edges = self.vertices_[1:] - self.vertices_[0]
        self.volume = abs(np.linalg.det(edges)) / np.prod(np.arange(1, self.dim + 1))
        if self.volume < 1e-14:
            raise ValueError("degenerate simplex")
        self._inv = np.linalg.inv(edges)

    @classmethod
    def from_vertex_values(cls, vertices, values) -> "AffinePiece":
        v = np.asarray(vertices, dtype=float)
        lhs = np.hstack([np.ones((v.shape[0], 1)), v])
        coef = np.linalg.solve(lhs, np.asarray(values, dtype=float))
        return cls(v, coef[0], coef[1:])

    @property
    def vertices(self) -> np.ndarray:
        return self.vertices_

    def barycentric(self, y) -> np.ndarray:
        lam = (y - self.vertices_[0]) @ self._inv
        return np.concatenate([1.0 - lam.sum(axis=-1, keepdims=True), lam], axis=-1)

    def contains(self, y, tol=_EPS) -> np.ndarray:
        return np.all(self.barycentric(y) >= -tol, axis=-1)

    def halfspaces(self) -> tuple[np.ndarray, np.ndarray]:
        # lambda_i(y) >= 0 for every barycentric coordinate
        v0 = self.vertices_[0]
        rows = [self._inv.sum(axis=1)]
        rhs = [1.0 + v0 @ self._inv.sum(axis=1)]
        for i in range(self.dim):
            rows.append(-self._inv[:, i])
            rhs.append(-v0 @ self._inv[:, i])
        return np.array(rows), np.array(rhs)

    def polygon(self) -> list[tuple[float, float]]:
        v = self.vertices_
        area2 = (v[1, 0] - v[0, 0]) * (v[2, 1] - v[0, 1]) - (v[1, 1] - v[0, 1]) * (v[2, 0] - v[0, 0])
        pts = [tuple(p) for p in v]
        return pts if area2 > 0 else pts[::-1]

    def value(self, y) -> np.ndarray:
        return self.a + y @ self.g

    def grad(self, y) -> np.ndarray:
        return np.broadcast_to(self.g, y.shape[:-1] + (self.dim,)).copy()


def _clip_polygon(poly, normal, offset):
    """Sutherland-Hodgman: keep the part of ``poly`` with ``normal.y <= offset``."""
    out = []
    n = len(poly)
    if n == 0:
        return out
    nx, ny = normal
    prev = poly[-1]
    prev_s = nx * prev[0] + ny * prev[1] - offset
    for cur in poly:
        cur_s = nx * cur[0] + ny * cur[1] - offset
        if cur_s <= _EPS:
            if prev_s > _EPS:
                t = prev_s / (prev_s - cur_s)
                out.append((prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])))
            out.append(cur)
        elif prev_s <= _EPS:
            t = prev_s / (prev_s - cur_s)
            out.append((prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])))
        prev, prev_s = cur, cur_s
    return out


def _polytope_vertices(A, b, d):
    verts = []
    for rows in itertools.combinations(range(A.shape[0]), d):
        M = A[list(rows)]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        v = np.linalg.solve(M, b[list(rows)])
        if np.all(A @ v <= b + 1e-10):
            verts.append(v)
    if not verts:
        return np.empty((0, d))
    verts = np.array(verts)
    keep = np.unique(np.round(verts, 11), axis=0, return_index=True)[1]
    return verts[np.sort(keep)]


def intersection_simplices(p, q_vertices_reflected_halfspaces, d) -> np.ndarray:
    """Simplices tiling ``p`` intersected with a polytope given by half-spaces."""
    A_q, b_q = q_vertices_reflected_halfspaces
    if d == 2:
        poly = p.polygon()
        for normal, offset in zip(A_q, b_q):
            poly = _clip_polygon(poly, normal, offset)
            if len(poly) < 3:
                return np.empty((0, 3, 2))
        pts = np.array(poly)
        tris = np.stack([np.repeat(pts[:1], len(pts) - 2, axis=0), pts[1:-1], pts[2:]], axis=1)
        return tris
    A_p, b_p = p.halfspaces()
    verts = _polytope_vertices(np.vstack([A_p, A_q]), np.concatenate([b_p, b_q]), d)
    if len(verts) < d + 1:
        return np.empty((0, d + 1, d))
    try:
        tri = Delaunay(verts)
    except QhullError:
        return np.empty((0, d + 1, d))
    return verts[tri.simplices]


def _simplices_rule(simplices: np.ndarray, degree: int):
    d = simplices.shape[-1]
    lam, w = _collapsed_reference(d, points_for_degree(degree))
    edges = simplices[:, 1:] - simplices[:, :1]
    vol = np.abs(np.linalg.det(edges))
    nodes = simplices[:, None, 0, :] + np.einsum("qk,tkd->tqd", lam, edges)
    weights = vol[:, None] * w[None, :]
    ok = vol > 1e-15
    return nodes[ok].reshape(-1, d), weights[ok].ravel()


def overlay_convolution(pieces, x) -> tuple[float, np.ndarray, np.ndarray]:
    """Exact ``(f*f)(x)``, ``grad`` and ``hessian`` for a piecewise polynomial ``f``.

    Uses ``grad (f*f)(x) = int f(y) grad f(x - y) dy`` and
    ``hess (f*f)(x) = int grad f(y) (x) grad f(x - y) dy``.
    """
    x = np.asarray(x, dtype=float)
    d = x.size
    nodes_all, weights_all, pi_all, qi_all = [], [], [], []
    for i, p in enumerate(pieces):
        for j, q in enumerate(pieces):
            # reflected piece x - q occupies [x - q.hi, x - q.lo]
            lo = np.maximum(p.lo, x - q.hi)
            hi = np.minimum(p.hi, x - q.lo)
            if np.any(hi - lo <= _EPS):
                continue
            degree = p.degree + q.degree
            if p.is_box and q.is_box:
                n = tuple(
                    points_for_degree(p.factors[k].size + q.factors[k].size - 2) for k in range(d)
                )
                nodes, weights = tensor_rule(lo, hi, n)
            else:
                A_q, b_q = q.halfspaces()
                simplices = intersection_simplices(p, (-A_q, b_q - A_q @ x), d)
                if len(simplices) == 0:
                    continue
                nodes, weights = _simplices_rule(simplices, degree)
            nodes_all.append(nodes)
            weights_all.append(weights)
            pi_all.append(np.full(len(weights), i))
            qi_all.append(np.full(len(weights), j))
    if not nodes_all:
        return 0.0, np.zeros(d), np.zeros((d, d))
    y = np.vstack(nodes_all)
    w = np.concatenate(weights_all)
    pi = np.concatenate(pi_all)
    qi = np.concatenate(qi_all)
    z = x - y
    fp = np.empty(len(w))
    fq = np.empty(len(w))
    gp = np.empty((len(w), d))
    gq = np.empty((len(w), d))
    for k, piece in enumerate(pieces):
        m = pi == k
        if m.any():
            fp[m] = piece.value(y[m])
            gp[m] = piece.grad(y[m])
        m = qi == k
        if m.any():
            fq[m] = piece.value(z[m])
            gq[m] = piece.grad(z[m])
    val = float(np.sum(w * fp * fq))
    grad = (w * fp) @ gq
    hess = np.einsum("n,ni,nj->ij", w, gp, gq)
    return val, grad, 0.5 * (hess + hess.T)
