"""The smoothed basis: self-convolution of a nodal basis."""

from __future__ import annotations

import itertools

import numpy as np

from .nodal import Flavor, NodalBasis, UnsupportedOrderError, as_points
from .pieces import overlay_convolution


def bspline3(t, order: int = 0) -> np.ndarray:
    """Centered cardinal cubic B-spline on ``[-2, 2]`` and derivatives up to 3.

    Derivative orders with jumps (third) take the left limit at the knots.
    """
    t = np.asarray(t, dtype=float)
    a = np.abs(t)
    s = np.where(t > 0.0, 1.0, -1.0)
    inner = a < 1.0
    outer = (a >= 1.0) & (a < 2.0)
    r = 2.0 - a
    out = np.zeros_like(t)
    if order == 0:
        out = np.where(inner, 2.0 / 3.0 - a**2 + 0.5 * a**3, np.where(outer, r**3 / 6.0, 0.0))
    elif order == 1:
        out = np.where(inner, s * (-2.0 * a + 1.5 * a**2), np.where(outer, -s * r**2 / 2.0, 0.0))
    elif order == 2:
        out = np.where(inner, -2.0 + 3.0 * a, np.where(outer, r, 0.0))
    elif order == 3:
        # piecewise constant 1, -3, 3, -1 on (-2,-1], (-1,0], (0,1], (1,2]
        out = np.select(
            [(t > -2.0) & (t <= -1.0), (t > -1.0) & (t <= 0.0), (t > 0.0) & (t <= 1.0), (t > 1.0) & (t <= 2.0)],
            [1.0, -3.0, 3.0, -1.0],
            0.0,
        )
    else:
        raise UnsupportedOrderError(f"order {order} > 3")
    return out


class SmoothedBasis:
    """``zeta_tilde = zeta_bar * zeta_bar`` with derivatives.

    ``derivative(x, k)`` returns an array of shape ``x.shape[:-1] + (d,) * k``.
    """

    backend: str
    tolerance: float
    max_order: int

    def __init__(self, parent: NodalBasis):
        self.parent = parent
        self.dim = parent.dim
        self.support_radius = 2.0 * parent.support_radius

    def derivative(self, x, order: int) -> np.ndarray:
        raise NotImplementedError

    def value(self, x) -> np.ndarray:
        return self.derivative(x, 0)

    def __call__(self, x):
        return self.value(x)

    def _check_order(self, order):
        if not 0 <= order <= self.max_order:
            raise UnsupportedOrderError(
                f"{self.backend} backend provides derivatives up to order {self.max_order}, got {order}"
            )

    def __repr__(self):
        return f"{type(self).__name__}(parent={self.parent!r})"


class AnalyticTensorCubic(SmoothedBasis):
    """Tensor product of cubic B-splines: the self-convolution of the Q1 hat."""

    backend = "analytic"
    tolerance = 1e-14
    max_order = 3

    def derivative(self, x, order: int = 0) -> np.ndarray:
        self._check_order(order)
        d = self.dim
        x = as_points(x, d)
        table = [[bspline3(x[..., a], n) for n in range(order + 1)] for a in range(d)]
        if order == 0:
            return np.prod([table[a][0] for a in range(d)], axis=0)
        out = np.empty(x.shape[:-1] + (d,) * order)
        for idx in itertools.product(range(d), repeat=order):
            counts = np.bincount(idx, minlength=d)
            val = table[0][counts[0]]
            for a in range(1, d):
                val = val * table[a][counts[a]]
            out[(Ellipsis,) + idx] = val
        return out


class ConvolutionQuadrature(SmoothedBasis):
    """Pointwise convolution integral over the overlay of the two piece meshes.

    The integrand is polynomial on every intersection of a piece with a
    reflected, shifted piece, so the Gauss rules used are exact; the declared
    tolerance covers roundoff only.
    """

    backend = "quadrature"
    tolerance = 1e-12
    max_order = 2

    def __init__(self, parent: NodalBasis):
        super().__init__(parent)
        self._pieces = parent.pieces()

    def _evaluate_all(self, pts: np.ndarray):
        # per-invocation deduplication; nothing persists across calls
        uniq, inverse = np.unique(pts, axis=0, return_inverse=True)
        inverse = np.ravel(inverse)
        d = self.dim
        vals = np.zeros(len(uniq))
        grads = np.zeros((len(uniq), d))
        hess = np.zeros((len(uniq), d, d))
        r = self.support_radius
        for i, x in enumerate(uniq):
            if np.any(np.abs(x) >= r):
                continue
            vals[i], grads[i], hess[i] = overlay_convolution(self._pieces, x)
        return vals[inverse], grads[inverse], hess[inverse]

    def derivative(self, x, order: int = 0) -> np.ndarray:
        self._check_order(order)
        x = as_points(x, self.dim)
        pts = x.reshape(-1, self.dim)
        vals, grads, hess = self._evaluate_all(pts)
        out = (vals, grads, hess)[order]
        return out.reshape(x.shape[:-1] + (self.dim,) * order)


def smoothed(basis: NodalBasis, backend: str | None = None) -> SmoothedBasis:
    """Self-convolution of ``basis``; analytic for Q1 unless ``backend='quadrature'``."""
    if backend is None:
        backend = "analytic" if basis.flavor == Flavor.Q1 else "quadrature"
    if backend == "analytic":
        if basis.flavor != Flavor.Q1:
            raise ValueError("the analytic backend exists only for the Q1 basis")
        return AnalyticTensorCubic(basis)
    if backend == "quadrature":
        return ConvolutionQuadrature(basis)
    raise ValueError(f"unknown backend {backend!r}")
