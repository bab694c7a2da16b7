"""The lattice convolution operator ``C u = u_tilde|_Z^d``, its inverse, and the smooth nodal interpolant."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .basis.nodal import NodalBasis
from .interp import InterpolantField, Kind
from .lattice import InvalidParameterError, LatticeDomain, LatticeFunction

#: multipliers at or below this value make the operator non-invertible
MIN_MULTIPLIER_TOL = 1e-10


class NonInvertibleBasisError(ArithmeticError):
    """The Fourier multiplier has a (numerically) vanishing mode."""


def compute_stencil(basis: NodalBasis) -> dict[tuple[int, ...], float]:
    """``m(delta) = int zeta(y) zeta(y - delta) dy`` by exact per-piece Gauss quadrature.

    Integer shifts map the basis mesh onto itself, so the integrand is a
    product of two piece polynomials on every cell of the rule.
    """
    d = basis.dim
    R = math.ceil(basis.support_radius)
    quad = basis.cell_quadrature(2 * max(p.axis_degree for p in basis.pieces()))
    cells = np.array(list(itertools.product(range(-R, R), repeat=d)), dtype=float)
    y = (cells[:, None, :] + quad.nodes[None]).reshape(-1, d)
    w = np.tile(quad.weights, len(cells))
    zy = basis.value(y)
    stencil = {}
    for delta in itertools.product(range(-2 * R, 2 * R + 1), repeat=d):
        val = float(np.sum(w * zy * basis.value(y - np.array(delta, dtype=float))))
        if val != 0.0:
            stencil[delta] = val
    # exact symmetry m(delta) = m(-delta)
    return {k: 0.5 * (v + stencil.get(tuple(-i for i in k), 0.0)) for k, v in stencil.items()}


def _multiplier(stencil: dict, extent: tuple[int, ...]) -> np.ndarray:
    kernel = np.zeros(extent)
    for delta, val in stencil.items():
        kernel[tuple(np.mod(delta, extent))] += val
    # symmetric real kernel: the transform is real up to roundoff
    return np.real(np.fft.rfftn(kernel))


@dataclass(frozen=True, eq=False)
class ConvolutionOperator:
    """Stencil ``m``, its DFT multiplier on the half spectrum, and the basis it came from."""

    basis: NodalBasis
    domain: LatticeDomain
    stencil: dict
    multiplier: np.ndarray

    @property
    def min_multiplier(self) -> float:
        return float(self.multiplier.min())

    @property
    def invertible(self) -> bool:
        return self.min_multiplier > MIN_MULTIPLIER_TOL

    def full_multiplier(self) -> np.ndarray:
        """Multiplier on the full DFT grid (``fftn`` layout)."""
        kernel = np.zeros(self.domain.extent)
        for delta, val in self.stencil.items():
            kernel[tuple(np.mod(delta, self.domain.extent))] += val
        return np.real(np.fft.fftn(kernel))


def build_operator(basis: NodalBasis, domain: LatticeDomain) -> ConvolutionOperator:
    if basis.dim != domain.dim:
        raise InvalidParameterError("basis and domain dimensions differ")
    domain.check_support(basis.support_radius)
    stencil = compute_stencil(basis)
    mult = _multiplier(stencil, domain.extent)
    mult.flags.writeable = False
    return ConvolutionOperator(basis, domain, stencil, mult)


def _axes(d):
    return tuple(range(d))


def apply(op: ConvolutionOperator, u: LatticeFunction) -> LatticeFunction:
    """Periodic stencil convolution ``(C u)(xi) = sum_eta m(xi - eta) u(eta)``."""
    if u.domain != op.domain:
        raise InvalidParameterError("lattice function lives on a different domain")
    d = op.domain.dim
    out = np.zeros_like(u.values)
    for delta, val in op.stencil.items():
        out += val * np.roll(u.values, shift=delta, axis=_axes(d))
    return LatticeFunction(u.domain, out)


def solve(op: ConvolutionOperator, f: LatticeFunction) -> LatticeFunction:
    """``C^{-1} f`` by division in Fourier space (exact on the periodic box)."""
    if f.domain != op.domain:
        raise InvalidParameterError("lattice function lives on a different domain")
    if not op.invertible:
        raise NonInvertibleBasisError(
            f"min multiplier {op.min_multiplier:.3e} <= {MIN_MULTIPLIER_TOL:g}; basis is not invertible"
        )
    d = op.domain.dim
    axes = _axes(d)
    spectrum = np.fft.rfftn(f.values, axes=axes)
    spectrum /= op.multiplier[..., None]
    return LatticeFunction(f.domain, np.fft.irfftn(spectrum, s=op.domain.extent, axes=axes))


@dataclass(frozen=True, eq=False)
class InverseKernel:
    """Truncated inverse kernel ``g`` with ``g * m = delta_0``."""

    radius: int
    values: dict
    tail_bound: float
    l1_norm: float
    box: tuple

    def as_array(self) -> tuple[np.ndarray, np.ndarray]:
        """Offsets and values, offsets sorted lexicographically."""
        keys = sorted(self.values)
        return np.array(keys), np.array([self.values[k] for k in keys])

    def __call__(self, xi) -> float:
        return self.values.get(tuple(int(i) for i in np.atleast_1d(xi)), 0.0)


def inverse_kernel(op: ConvolutionOperator, radius: int, box: int | None = None) -> InverseKernel:
    """``g = F^{-1}(1 / m_hat)`` on a large periodic box, truncated to ``|xi|_inf <= radius``.

    ``tail_bound`` is the l^1 mass of ``g`` outside the truncation radius.
    """
    if not op.invertible:
        raise NonInvertibleBasisError("inverse kernel needs a positive multiplier")
    d = op.domain.dim
    n = box if box is not None else max(max(op.domain.extent), 4 * radius + 8, 64)
    extent = (n,) * d
    mult = _multiplier(op.stencil, extent)
    g = np.fft.irfftn(1.0 / mult, s=extent, axes=_axes(d))
    offsets = np.array(list(itertools.product(range(-(n // 2), n - n // 2), repeat=d)))
    vals = g[tuple(np.mod(offsets, n).T)]
    inside = np.max(np.abs(offsets), axis=1) <= radius
    kept = {tuple(int(i) for i in o): float(v) for o, v in zip(offsets[inside], vals[inside])}
    return InverseKernel(
        radius=radius,
        values=kept,
        tail_bound=float(np.sum(np.abs(vals[~inside]))),
        l1_norm=float(np.sum(np.abs(vals))),
        box=extent,
    )


def smooth_nodal_interpolant(
    basis: NodalBasis, u: LatticeFunction, op: ConvolutionOperator | None = None
) -> InterpolantField:
    """The tilde field with coefficients ``C^{-1} u``; it takes the value ``u(xi)`` at every site."""
    op = build_operator(basis, u.domain) if op is None else op
    return InterpolantField(solve(op, u), basis, Kind.TILDE)
