"""Periodic lattice domains, lattice functions, differences and l^p norms."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class InvalidParameterError(ValueError):
    """A numeric parameter is outside its admissible range."""


class DomainMismatchError(ValueError):
    """Two lattice functions live on different domains."""


def translation_invariant(fn: Callable) -> Callable:
    """Mark ``fn`` as invariant under ``u -> u + t`` for constant ``t``.

    The marker is checked by the test suite rather than enforced at runtime;
    no representative of the class ``[u]`` is ever chosen.
    """
    fn.__translation_invariant__ = True
    return fn


def is_translation_invariant(fn: Callable) -> bool:
    return getattr(fn, "__translation_invariant__", False)


@dataclass(frozen=True)
class LatticeDomain:
    """Periodic box of lattice sites ``prod_i [0, N_i)``."""

    extent: tuple[int, ...]

    def __post_init__(self):
        extent = tuple(int(n) for n in np.atleast_1d(self.extent))
        if not 1 <= len(extent) <= 3:
            raise InvalidParameterError(f"dimension must be 1, 2 or 3, got {len(extent)}")
        if any(n < 1 for n in extent):
            raise InvalidParameterError(f"extents must be positive, got {extent}")
        object.__setattr__(self, "extent", extent)

    @classmethod
    def cube(cls, d: int, n: int) -> "LatticeDomain":
        return cls((n,) * d)

    @property
    def dim(self) -> int:
        return len(self.extent)

    @property
    def size(self) -> int:
        return math.prod(self.extent)

    def sites(self) -> np.ndarray:
        """Canonical site coordinates, shape ``(*extent, d)``."""
        grids = np.meshgrid(*[np.arange(n) for n in self.extent], indexing="ij")
        return np.stack(grids, axis=-1)

    def wrap(self, xi) -> np.ndarray:
        return np.mod(xi, self.extent)

    def check_support(self, radius: float) -> None:
        """Raise if a basis of the given support radius would wrap onto itself."""
        need = 4 * math.ceil(radius)
        if min(self.extent) < need:
            raise InvalidParameterError(
                f"extent {self.extent} too small for support radius {radius}; need >= {need}"
            )


@dataclass(frozen=True, eq=False)
class LatticeFunction:
    """Values ``u(xi) in R^m`` on a periodic box, stored as ``(*extent, m)``."""

    domain: LatticeDomain
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape == self.domain.extent:
            values = values[..., None]
        if values.shape[:-1] != self.domain.extent:
            raise InvalidParameterError(
                f"values of shape {values.shape} do not match extent {self.domain.extent}"
            )
        if not np.all(np.isfinite(values)):
            raise InvalidParameterError("lattice function values must be finite")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def components(self) -> int:
        return self.values.shape[-1]

    @property
    def dim(self) -> int:
        return self.domain.dim

    def __call__(self, xi) -> np.ndarray:
        """Value at integer site(s) ``xi`` (periodically wrapped)."""
        idx = self.domain.wrap(np.asarray(xi, dtype=int))
        return self.values[tuple(np.moveaxis(idx, -1, 0))]

    def _check(self, other: "LatticeFunction") -> None:
        if self.domain != other.domain:
            raise DomainMismatchError(f"{self.domain} != {other.domain}")

    def __add__(self, other):
        if isinstance(other, LatticeFunction):
            self._check(other)
            return LatticeFunction(self.domain, self.values + other.values)
        return LatticeFunction(self.domain, self.values + np.asarray(other, dtype=float))

    def __sub__(self, other):
        if isinstance(other, LatticeFunction):
            self._check(other)
            return LatticeFunction(self.domain, self.values - other.values)
        return LatticeFunction(self.domain, self.values - np.asarray(other, dtype=float))

    def __mul__(self, c):
        return LatticeFunction(self.domain, float(c) * self.values)

    __rmul__ = __mul__

    def __neg__(self):
        return LatticeFunction(self.domain, -self.values)

    def allclose(self, other: "LatticeFunction", rtol=1e-12, atol=1e-12) -> bool:
        self._check(other)
        return bool(np.allclose(self.values, other.values, rtol=rtol, atol=atol))

    @classmethod
    def zeros(cls, domain: LatticeDomain, m: int = 1) -> "LatticeFunction":
        return cls(domain, np.zeros(domain.extent + (m,)))

    @classmethod
    def constant(cls, domain: LatticeDomain, c) -> "LatticeFunction":
        c = np.atleast_1d(np.asarray(c, dtype=float))
        return cls(domain, np.broadcast_to(c, domain.extent + c.shape).copy())

    @classmethod
    def delta(cls, domain: LatticeDomain, site=None, value=1.0) -> "LatticeFunction":
        value = np.atleast_1d(np.asarray(value, dtype=float))
        out = np.zeros(domain.extent + value.shape)
        site = (0,) * domain.dim if site is None else tuple(np.mod(site, domain.extent))
        out[site] = value
        return cls(domain, out)

    @classmethod
    def random(cls, domain: LatticeDomain, rng: np.random.Generator, m: int = 1) -> "LatticeFunction":
        return cls(domain, rng.standard_normal(domain.extent + (m,)))

    @classmethod
    def nyquist(cls, domain: LatticeDomain) -> "LatticeFunction":
        """The alternating field ``(-1)^(xi_1 + ... + xi_d)``."""
        return cls(domain, (-1.0) ** domain.sites().sum(axis=-1))


def lp_norm(u: LatticeFunction, p: float) -> float:
    """``(sum_xi |u(xi)|^p)^(1/p)``, Euclidean norm on ``R^m``; max for ``p = inf``."""
    p = float(p)
    if not p >= 1.0:
        raise InvalidParameterError(f"p must be in [1, inf], got {p}")
    mag = np.sqrt(np.sum(u.values**2, axis=-1)).ravel()
    if math.isinf(p):
        return float(mag.max(initial=0.0))
    scale = mag.max(initial=0.0)
    if scale == 0.0:
        return 0.0
    return float(scale * np.sum((mag / scale) ** p) ** (1.0 / p))


@translation_invariant
def forward_difference(u: LatticeFunction, k: int) -> LatticeFunction:
    """Periodic forward difference ``u(xi + e_k) - u(xi)``."""
    if not 0 <= k < u.dim:
        raise InvalidParameterError(f"axis {k} out of range for d={u.dim}")
    return LatticeFunction(u.domain, np.roll(u.values, -1, axis=k) - u.values)


def affine_sample(domain: LatticeDomain, A, b) -> LatticeFunction:
    """``u(xi) = A xi + b`` with ``xi`` the canonical representative in ``[0, N)``.

    ``A`` has shape ``(m, d)`` (a scalar or length-``d`` vector means ``m = 1``).
    """
    d = domain.dim
    A = np.asarray(A, dtype=float)
    if A.ndim == 0:
        A = np.full((1, d), float(A)) if d == 1 else A * np.eye(d)
    elif A.ndim == 1:
        A = A[None, :]
    if A.shape[1] != d:
        raise InvalidParameterError(f"A must have {d} columns, got shape {A.shape}")
    b = np.broadcast_to(np.atleast_1d(np.asarray(b, dtype=float)), (A.shape[0],))
    return LatticeFunction(domain, domain.sites() @ A.T + b)


@dataclass(frozen=True, eq=False)
class DeformationField:
    """``y(xi) = A xi + u(xi)``: far-field gradient ``A`` plus a displacement."""

    A: np.ndarray
    displacement: LatticeFunction

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        d = self.displacement.dim
        if A.shape != (d, d) or self.displacement.components != d:
            raise InvalidParameterError("deformation needs a d x d gradient and R^d-valued displacement")
        A.flags.writeable = False
        object.__setattr__(self, "A", A)

    @classmethod
    def admissible(cls, A, displacement: LatticeFunction) -> "DeformationField":
        """Construct and require ``det A > 0``."""
        if not np.linalg.det(np.atleast_2d(A)) > 0:
            raise InvalidParameterError("admissible deformations need det A > 0")
        return cls(A, displacement)

    def __call__(self, xi) -> np.ndarray:
        xi = np.asarray(xi)
        return xi @ self.A.T + self.displacement(xi)

    def positions(self) -> np.ndarray:
        """Deformed positions at all canonical sites, shape ``(*extent, d)``."""
        sites = self.displacement.domain.sites()
        return sites @ self.A.T + self.displacement.values
