"""Simplicial subdivisions of the unit cell."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np


class PartitionError(ValueError):
    """The simplices do not form a valid translation-invariant, symmetric tiling."""


def _key(points) -> tuple:
    return tuple(sorted(tuple(np.round(p, 10) + 0.0) for p in points))


@dataclass(frozen=True)
class SimplicialPartition:
    """Simplices tiling ``[0, 1]^d``; tiled periodically they partition ``R^d``.

    Vertices that are not lattice points take the multilinear average of the
    cell corners when a nodal basis is built on the partition.
    """

    dim: int
    simplices: tuple
    name: str = "custom"

    def __post_init__(self):
        simplices = tuple(np.asarray(s, dtype=float) for s in self.simplices)
        for s in simplices:
            if s.shape != (self.dim + 1, self.dim):
                raise PartitionError(f"simplex of shape {s.shape} in a d={self.dim} partition")
        object.__setattr__(self, "simplices", simplices)

    def volumes(self) -> np.ndarray:
        fact = math.factorial(self.dim)
        return np.array([abs(np.linalg.det(s[1:] - s[0])) / fact for s in self.simplices])

    def _facets(self):
        for s in self.simplices:
            for drop in range(self.dim + 1):
                yield np.delete(s, drop, axis=0)

    def check(self) -> list[str]:
        """Return a list of violated invariants (empty when valid)."""
        problems = []
        vols = self.volumes()
        if np.any(vols < 1e-12):
            problems.append("degenerate simplex")
        if abs(vols.sum() - 1.0) > 1e-12:
            problems.append(f"volumes sum to {vols.sum()}, not 1")
        if any(np.any(s < -1e-12) or np.any(s > 1 + 1e-12) for s in self.simplices):
            problems.append("simplex leaves the unit cell")

        # conformity: interior facets shared by two simplices, boundary facets
        # on x_i = 0 match the shifted facets on x_i = 1
        interior: dict = {}
        faces = {(i, side): set() for i in range(self.dim) for side in (0, 1)}
        for f in self._facets():
            on_face = [
                (i, side)
                for i in range(self.dim)
                for side in (0, 1)
                if np.allclose(f[:, i], float(side))
            ]
            if on_face:
                i, side = on_face[0]
                shifted = f.copy()
                shifted[:, i] -= side
                faces[(i, side)].add(_key(shifted))
            else:
                interior[_key(f)] = interior.get(_key(f), 0) + 1
        if any(c != 2 for c in interior.values()):
            problems.append("non-conforming interior facets")
        for i in range(self.dim):
            if faces[(i, 0)] != faces[(i, 1)]:
                problems.append(f"facets on x_{i}=0 and x_{i}=1 do not match (not translation invariant)")

        # -T = T: negate, shift back into the unit cell, compare
        ones = np.ones(self.dim)
        mine = {_key(s) for s in self.simplices}
        mirrored = {_key(ones - s) for s in self.simplices}
        if mine != mirrored:
            problems.append("not symmetric about the origin")
        return problems

    def validate(self) -> "SimplicialPartition":
        problems = self.check()
        if problems:
            raise PartitionError("; ".join(problems))
        return self


def interval_partition() -> SimplicialPartition:
    return SimplicialPartition(1, ([[0.0], [1.0]],), "interval")


def kuhn_partition(d: int) -> SimplicialPartition:
    """Kuhn (Freudenthal) subdivision: ``d!`` simplices along the main diagonal."""
    simplices = []
    for perm in itertools.permutations(range(d)):
        v = np.zeros(d)
        verts = [v.copy()]
        for axis in perm:
            v[axis] = 1.0
            verts.append(v.copy())
        simplices.append(verts)
    return SimplicialPartition(d, tuple(simplices), "kuhn")


def crisscross_partition() -> SimplicialPartition:
    """Unit square split into four triangles about its center."""
    c = [0.5, 0.5]
    corners = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
    tris = [[corners[i], corners[(i + 1) % 4], c] for i in range(4)]
    return SimplicialPartition(2, tuple(tris), "crisscross")


def default_partition(d: int) -> SimplicialPartition:
    if d == 1:
        return interval_partition()
    if d == 2:
        return crisscross_partition()
    if d == 3:
        return kuhn_partition(3)
    raise ValueError(f"no default partition for d={d}")
