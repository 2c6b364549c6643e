"""Degenerate right-hand sides through the shifts ``g_n = g + 1/(2n)``.

Each rung satisfies ``inf g_n >= 1/(2n)`` and ``|g_n - g| <= 1/n``, so every
linear solve is strictly diagonally dominant.  Uniform boundedness of the
discrete Hessian along the ladder stands in for a ``C^{1,1}`` bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .howard import DEFAULT_TOL, ConvergenceError, policy_iteration
from .scheme import BellmanScheme

C11_VARIATION = 0.10


class LadderError(RuntimeError):
    """A rung failed; ``report`` holds the completed rungs."""

    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


@dataclass
class Rung:
    n: int
    shift: float
    report: object


@dataclass
class LadderReport:
    rungs: list
    distances: np.ndarray
    top_half: list
    d2_variation: float

    @property
    def c11_ok(self):
        return self.d2_variation <= C11_VARIATION

    @property
    def final(self):
        return self.rungs[-1].report


def _variation(values):
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return 0.0
    return float((values.max() - values.min()) / values.max())


def degeneracy_ladder(problem, n_list, net, tol=DEFAULT_TOL, max_iters=100, method="howard",
                      linear_solver="direct"):
    n_list = [int(n) for n in n_list]
    if not n_list or any(n < 1 for n in n_list):
        raise ValueError("n_list must hold positive integers")
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be strictly increasing")
    scheme = BellmanScheme(problem, net)
    rungs = []
    for n in n_list:
        shifted = problem.shifted(1.0 / (2 * n))
        scheme.problem = shifted
        scheme.set_g(shifted.g)
        try:
            rep = policy_iteration(shifted, net, tol, max_iters, method, linear_solver, scheme=scheme)
        except ConvergenceError as exc:
            partial = _summarize(rungs)
            raise LadderError(f"rung n={n} did not converge: {exc}", partial) from exc
        rungs.append(Rung(n=n, shift=1.0 / (2 * n), report=rep))
    return _summarize(rungs)


def _summarize(rungs):
    k = len(rungs)
    dist = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            dist[i, j] = dist[j, i] = float(np.max(np.abs(rungs[i].report.u - rungs[j].report.u), initial=0.0))
    top = list(range(k - math.ceil(k / 2), k)) if k else []
    d2 = [rungs[i].report.monitors.interior_D2_max for i in top if rungs[i].report.monitors is not None]
    return LadderReport(rungs=rungs, distances=dist, top_half=top, d2_variation=_variation(d2))
