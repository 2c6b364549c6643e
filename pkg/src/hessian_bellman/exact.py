"""Closed-form solutions on the unit ball, used as benchmarks.

* ``g = c`` constant: ``u = s (|x|^2 - 1) / 2`` with ``C(d, m) s^m = c^(m-1)``.
* ``g = |x|^2``, ``m = 2``: ``u = a (r^3 - 1) / 3``.  The Hessian has the
  radial eigenvalue ``2 a r`` and ``d - 1`` tangential ones ``a r``, so
  ``P_2 = a^2 r^2 (2 (d-1) + C(d-1, 2))`` and ``a`` makes this ``r^2``.
"""

from __future__ import annotations

import math

import numpy as np


def constant_rhs_solution(x, d, m, c=1.0):
    if c < 0:
        raise ValueError("c must be nonnegative")
    s = (c ** (m - 1) / math.comb(d, m)) ** (1.0 / m)
    x = np.asarray(x, dtype=float)
    return 0.5 * s * (np.sum(x * x, axis=-1) - 1.0)


def radial_square_coefficient(d):
    return 1.0 / math.sqrt(2 * (d - 1) + math.comb(d - 1, 2))


def radial_square_solution(x, d, m=2):
    if m != 2:
        raise ValueError("the closed form for g = |x|^2 exists for m = 2 only")
    x = np.asarray(x, dtype=float)
    r = np.sqrt(np.sum(x * x, axis=-1))
    return radial_square_coefficient(d) * (r**3 - 1.0) / 3.0


def radial_square_normal_derivative(d):
    """Inward normal derivative of the ``g = |x|^2`` solution on the sphere."""
    return -radial_square_coefficient(d)


def exact_solution(problem):
    """Closed form for ``problem`` on the disc, or ``None``."""
    if problem.domain_name != "disc":
        return None
    x = problem.grid.coords
    shift = problem.g_params.get("shift", 0.0)
    if problem.g_name == "constant":
        return constant_rhs_solution(x, problem.d, problem.m, problem.g_params["value"] + shift)
    if problem.g_name == "radial-square" and problem.m == 2 and shift == 0.0:
        scale = problem.g_params["scale"]
        return math.sqrt(scale) * radial_square_solution(x, problem.d)
    return None
