"""Symmetric triangle quadrature in barycentric coordinates.

Weights sum to one, so an integral is ``area * sum(w * f(points))``.
"""
import numpy as np

_S15 = np.sqrt(15.0)


def _rule3():
    # edge midpoints, exact for quadratics
    pts = np.array([[0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]])
    return pts, np.full(3, 1.0 / 3.0)


def _rule7():
    # degree 5
    a1, b1 = (9.0 + 2.0 * _S15) / 21.0, (6.0 - _S15) / 21.0
    a2, b2 = (9.0 - 2.0 * _S15) / 21.0, (6.0 + _S15) / 21.0
    w1, w2 = (155.0 - _S15) / 1200.0, (155.0 + _S15) / 1200.0
    pts = [[1 / 3, 1 / 3, 1 / 3]]
    wts = [9.0 / 40.0]
    for a, b, w in ((a1, b1, w1), (a2, b2, w2)):
        pts += [[a, b, b], [b, a, b], [b, b, a]]
        wts += [w, w, w]
    return np.array(pts), np.array(wts)


RULES = {3: _rule3, 7: _rule7}


def triangle_rule(n_points=3):
    try:
        return RULES[n_points]()
    except KeyError:
        raise ValueError(f"no {n_points}-point rule; available: {sorted(RULES)}") from None


def gauss_line(n_points=2):
    """Gauss-Legendre points on [0, 1] with weights summing to one."""
    x, w = np.polynomial.legendre.leggauss(n_points)
    return 0.5 * (x + 1.0), 0.5 * w
