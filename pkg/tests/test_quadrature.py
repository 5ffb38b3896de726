from math import factorial

import numpy as np
import pytest

from stochac.errors import InvalidArgument
from stochac.quadrature import triangle_rule


def monomial_moment(p, q):
    """int x^p y^q over the reference triangle (0,0),(1,0),(0,1), times 2 (area-normalized)."""
    return 2.0 * factorial(p) * factorial(q) / factorial(p + q + 2)


@pytest.mark.parametrize("degree", [1, 2, 4, 6, 8])
def test_monomial_exactness(degree):
    rule = triangle_rule(degree)
    assert rule.degree >= degree
    assert np.all(rule.weights > 0)
    assert rule.weights.sum() == pytest.approx(1.0, abs=1e-15)
    assert np.all(rule.points >= 0) and np.allclose(rule.points.sum(axis=1), 1.0, atol=1e-15)
    x, y = rule.points[:, 1], rule.points[:, 2]
    for p in range(degree + 1):
        for q in range(degree + 1 - p):
            approx = rule.weights @ (x**p * y**q)
            assert approx == pytest.approx(monomial_moment(p, q), abs=1e-14)


def test_degree4_rule_is_six_points():
    assert triangle_rule(4).points.shape == (6, 3)


def test_rule_not_exact_beyond_degree():
    rule = triangle_rule(4)
    x = rule.points[:, 1]
    assert abs(rule.weights @ x**6 - monomial_moment(6, 0)) > 1e-8


def test_unsupported_degree():
    with pytest.raises(InvalidArgument):
        triangle_rule(40)
