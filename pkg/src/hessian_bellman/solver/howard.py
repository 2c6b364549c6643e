"""Howard policy iteration for the discrete Bellman equation.

Each step solves the linear problem ``A_p u = f_p`` of the current policy
``p`` (``A_p = -L^p``, an M-matrix) and then picks, node by node, the
control minimizing ``L^w u + f(w)``.  The iterates decrease monotonically
and the policy settles after finitely many steps.

The residual is ``max_i |min_w (L^w u + f(w))_i| / A_ii``: the Bellman
defect divided by the diagonal, i.e. measured in units of ``u``.  Raw
defects grow like ``h^-2`` times round-off near cut cells, which would
make any fixed tolerance meaningless.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .scheme import BellmanScheme

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
METHODS = ("howard", "value")
LINEAR_SOLVERS = ("direct", "gauss-seidel")


class ConvergenceError(RuntimeError):
    """Iteration limit reached; ``history`` holds the residuals so far."""

    def __init__(self, message, history, report=None):
        super().__init__(message)
        self.history = list(history)
        self.report = report


@dataclass
class SolveReport:
    u: np.ndarray
    policy: np.ndarray
    residual_history: list
    iterations: int
    method: str
    converged: bool
    monitors: object = None
    problem: object = field(default=None, repr=False)
    net: object = field(default=None, repr=False)

    @property
    def residual(self):
        return self.residual_history[-1] if self.residual_history else math.inf


def scaled_residual(scheme, u):
    vals, policy = scheme.bellman(u)
    return float(np.max(np.abs(vals) / scheme.diagonal(policy), initial=0.0)), policy


def discrete_bellman_operator(u, node, net, problem, scheme=None):
    """``(min_w L^w u + f(w), argmin)`` at one interior node."""
    if scheme is None:
        scheme = BellmanScheme(problem, net)
    if not 0 <= node < scheme.size:
        raise IndexError(f"node {node} is not an interior node")
    vals = scheme.control_values(np.asarray(u, dtype=float))[:, node]
    k = int(np.argmin(vals))
    return float(vals[k]), k


def _gauss_seidel(a, b, u, colors, tol, max_sweeps=100_000):
    """Multicolour Gauss-Seidel; each colour is one vectorized Jacobi update."""
    diag = a.diagonal()
    blocks = []
    for c in np.unique(colors):
        idx = np.flatnonzero(colors == c)
        blocks.append((idx, a[idx], diag[idx]))
    u = u.copy()
    for sweep in range(max_sweeps):
        change = 0.0
        for idx, rows, dg in blocks:
            new = u[idx] + (b[idx] - rows @ u) / dg
            change = max(change, float(np.max(np.abs(new - u[idx]), initial=0.0)))
            u[idx] = new
        if change <= tol:
            return u, sweep + 1
    raise ConvergenceError(f"Gauss-Seidel did not reach {tol:g} in {max_sweeps} sweeps", [change])


def _improve(scheme, u, policy):
    """Argmin policy; a node keeps its control unless another is better beyond round-off."""
    vals = scheme.control_values(u)
    best = np.argmin(vals, axis=0)
    nodes = np.arange(scheme.size)
    current = vals[policy, nodes]
    top = vals[best, nodes]
    eps = 1e-13 * np.maximum(1.0, np.abs(current)) * (1.0 + scheme.diagonal(policy) * np.max(np.abs(u), initial=0.0))
    return np.where(current - top > eps, best, policy)


def policy_iteration(problem, net, tol=DEFAULT_TOL, max_iters=100, method="howard", linear_solver="direct",
                     scheme=None, u0=None, monitors=True):
    """Solve the discrete Bellman equation of ``problem`` over ``net``.

    ``method="value"`` runs the explicit monotone iteration
    ``u <- u + min_w (L^w u + f(w)) / A_ii`` instead; it needs ``O(h^-2)``
    iterations and is meant for diagnosing policy cycling only.
    """
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    if linear_solver not in LINEAR_SOLVERS:
        raise ValueError(f"linear solver must be one of {LINEAR_SOLVERS}")
    if not tol > 0:
        raise ValueError("tol must be positive")
    if scheme is None:
        scheme = BellmanScheme(problem, net)
    n = scheme.size
    u = np.zeros(n) if u0 is None else np.asarray(u0, dtype=float).copy()
    history = []
    if method == "value":
        u, policy, history, converged = _value_iteration(scheme, u, tol, max_iters)
    else:
        policy = np.zeros(n, dtype=np.int64) if u0 is None else scheme.bellman(u)[1]
        colors = problem.grid.colors() if linear_solver == "gauss-seidel" else None
        converged = False
        for it in range(max_iters):
            a = scheme.matrix(policy)
            b = scheme.rhs(policy)
            if linear_solver == "direct":
                u = spla.splu(a.tocsc()).solve(b)
            else:
                u, _ = _gauss_seidel(a, b, u, colors, tol / 10.0)
            res, _ = scaled_residual(scheme, u)
            history.append(res)
            log.debug("policy iteration %d: residual %.3e", it, res)
            new = _improve(scheme, u, policy)
            if res <= tol or np.array_equal(new, policy):
                converged = res <= tol
                break
            policy = new
    report = SolveReport(u=u, policy=policy, residual_history=history, iterations=len(history), method=method,
                         converged=converged, problem=problem, net=net)
    if not converged:
        raise ConvergenceError(
            f"{method} iteration stopped at residual {history[-1] if history else math.nan:.3e} > {tol:g}",
            history, report)
    if monitors:
        from .monitors import compute_monitors

        report.monitors = compute_monitors(report, scheme)
    return report


def _value_iteration(scheme, u, tol, max_iters):
    history = []
    for _ in range(max_iters):
        vals, policy = scheme.bellman(u)
        step = vals / scheme.diagonal(policy)
        res = float(np.max(np.abs(step), initial=0.0))
        history.append(res)
        if res <= tol:
            return u, policy, history, True
        u = u + step
    vals, policy = scheme.bellman(u)
    return u, policy, history, False
