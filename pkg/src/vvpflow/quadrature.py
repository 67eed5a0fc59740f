"""Quadrature rules on reference simplices.

Rules are conical products of Gauss-Jacobi lines (Stroud), so all weights
are positive at every exactness degree.  Points are stored in barycentric
coordinates and weights sum to the reference-simplex measure: 1 for the
segment, 1/2 for the unit triangle, 1/6 for the unit tetrahedron.

Every constructor checks monomial exactness against closed-form moments
before returning, so a rule object can be trusted to integrate any
polynomial up to ``exactness_degree`` exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_jacobi

__all__ = ["QuadratureRule", "edge_rule", "triangle_rule", "tet_rule"]


@dataclass(frozen=True)
class QuadratureRule:
    """Positive-weight rule on a reference simplex.

    points : (nq, d+1) barycentric coordinates
    weights : (nq,) positive, summing to the reference measure
    exactness_degree : total polynomial degree integrated exactly
    """

    points: np.ndarray
    weights: np.ndarray
    exactness_degree: int

    @property
    def dim(self) -> int:
        return self.points.shape[1] - 1

    def __len__(self) -> int:
        return self.weights.shape[0]


def _jacobi01(n: int, alpha: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Jacobi nodes/weights for integral_0^1 (1-u)^alpha g(u) du."""
    x, w = roots_jacobi(n, alpha, 0.0)
    return (1.0 + x) / 2.0, w / 2.0 ** (alpha + 1)


def _reference_moment(alpha: tuple[int, ...]) -> float:
    """Exact integral of a Cartesian monomial over the unit d-simplex."""
    d = len(alpha)
    num = 1.0
    for a in alpha:
        num *= math.factorial(a)
    return num / math.factorial(sum(alpha) + d)


def _verify(rule: QuadratureRule) -> None:
    d = rule.dim
    # Cartesian coordinates of the quadrature points: lambda_1..lambda_d.
    xyz = rule.points[:, 1:]
    for total in range(rule.exactness_degree + 1):
        for alpha in _multi_indices(d, total):
            approx = float(np.sum(rule.weights * np.prod(xyz ** np.array(alpha), axis=1)))
            exact = _reference_moment(alpha)
            if abs(approx - exact) > 5e-14 * (1.0 + abs(exact)):
                raise AssertionError(
                    f"quadrature rule failed exactness check: dim={d} "
                    f"monomial={alpha} got={approx!r} want={exact!r}"
                )


def _multi_indices(d: int, total: int):
    if d == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for tail in _multi_indices(d - 1, total - head):
            yield (head, *tail)


def edge_rule(degree: int) -> QuadratureRule:
    """Gauss-Legendre rule on the reference segment, barycentric storage."""
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    m = max(1, (degree + 2) // 2)
    u, w = _jacobi01(m, 0)
    pts = np.column_stack([1.0 - u, u])
    rule = QuadratureRule(pts, w, 2 * m - 1)
    _verify(rule)
    return rule


def triangle_rule(degree: int) -> QuadratureRule:
    """Conical-product rule on the unit triangle, exact to ``degree``."""
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    m = max(1, (degree + 2) // 2)
    u1, w1 = _jacobi01(m, 1)
    u2, w2 = _jacobi01(m, 0)
    x = np.repeat(u1, m)
    y = np.tile(u2, m) * (1.0 - x)
    w = np.repeat(w1, m) * np.tile(w2, m)
    pts = np.column_stack([1.0 - x - y, x, y])
    rule = QuadratureRule(pts, w, 2 * m - 1)
    _verify(rule)
    return rule


def tet_rule(degree: int) -> QuadratureRule:
    """Conical-product rule on the unit tetrahedron, exact to ``degree``."""
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    m = max(1, (degree + 2) // 2)
    u1, w1 = _jacobi01(m, 2)
    u2, w2 = _jacobi01(m, 1)
    u3, w3 = _jacobi01(m, 0)
    x = np.repeat(u1, m * m)
    eta = np.tile(np.repeat(u2, m), m)
    y = eta * (1.0 - x)
    z = np.tile(u3, m * m) * (1.0 - x) * (1.0 - eta)
    w = np.repeat(w1, m * m) * np.tile(np.repeat(w2, m), m) * np.tile(w3, m * m)
    pts = np.column_stack([1.0 - x - y - z, x, y, z])
    rule = QuadratureRule(pts, w, 2 * m - 1)
    _verify(rule)
    return rule
