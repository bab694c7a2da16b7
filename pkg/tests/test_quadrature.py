import itertools
import math

import numpy as np
import pytest

from latticeinterp.basis import crisscross_partition, kuhn_partition
from latticeinterp.quadrature import (
    cell_quadrature,
    gauss_legendre,
    points_for_degree,
    simplex_rule,
    simplicial_cell_quadrature,
    tensor_rule,
)


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8])
def test_gauss_legendre_exactness(n):
    x, w = gauss_legendre(n, -1.0, 2.0)
    for k in range(2 * n):
        exact = (2.0 ** (k + 1) - (-1.0) ** (k + 1)) / (k + 1)
        assert np.sum(w * x**k) == pytest.approx(exact, rel=1e-13, abs=1e-13)


def test_gauss_rejects_zero_points():
    with pytest.raises(ValueError):
        gauss_legendre(0)


@pytest.mark.parametrize("degree,n", [(0, 1), (1, 1), (2, 2), (3, 2), (6, 4), (11, 6)])
def test_points_for_degree(degree, n):
    assert points_for_degree(degree) == n


@pytest.mark.parametrize("d", [1, 2, 3])
@pytest.mark.parametrize("subdivisions", [1, 2])
def test_cell_quadrature_integrates_monomials(d, subdivisions):
    q = cell_quadrature(d, 5, subdivisions)
    assert q.dim == d
    assert q.weights.sum() == pytest.approx(1.0, abs=1e-14)
    for exps in itertools.product(range(6), repeat=d):
        exact = math.prod(1.0 / (e + 1) for e in exps)
        approx = np.sum(q.weights * np.prod(q.nodes**np.array(exps), axis=1))
        assert approx == pytest.approx(exact, abs=1e-14)


def test_tensor_rule_box():
    x, w = tensor_rule([0.0, 1.0], [2.0, 4.0], 3)
    assert w.sum() == pytest.approx(6.0)
    assert np.sum(w * x[:, 0] * x[:, 1] ** 2) == pytest.approx(2.0 * (64 - 1) / 3.0)


@pytest.mark.parametrize("d", [1, 2, 3])
@pytest.mark.parametrize("degree", [1, 2, 4, 6])
def test_simplex_rule_total_degree(d, degree):
    verts = np.vstack([np.zeros(d), np.eye(d)])
    x, w = simplex_rule(verts, degree)
    # int over the unit simplex of x^a = prod(a_i!) / (d + |a|)!
    for exps in itertools.product(range(degree + 1), repeat=d):
        if sum(exps) > degree:
            continue
        exact = math.prod(math.factorial(e) for e in exps) / math.factorial(d + sum(exps))
        approx = np.sum(w * np.prod(x ** np.array(exps), axis=1))
        assert approx == pytest.approx(exact, rel=1e-12, abs=1e-15)


@pytest.mark.parametrize("part", [crisscross_partition(), kuhn_partition(2), kuhn_partition(3)])
def test_simplicial_cell_quadrature(part):
    q = simplicial_cell_quadrature(part.simplices, 4)
    assert q.weights.sum() == pytest.approx(1.0, abs=1e-14)
    d = part.dim
    x2 = np.sum(q.weights * q.nodes[:, 0] ** 2 * q.nodes[:, d - 1] ** 2)
    assert x2 == pytest.approx(1 / 9 if d > 1 else 1 / 5, abs=1e-14)


def test_with_corners_are_inside_cell():
    q = cell_quadrature(2, 3)
    pts = q.with_corners()
    assert pts.shape[0] == q.nodes.shape[0] + 4
    assert np.all((pts > 0) & (pts < 1))
