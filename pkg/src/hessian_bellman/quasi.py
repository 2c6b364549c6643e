"""Randomized checkers for the convexity facts behind the Bellman reduction.

* ``G(w, l) = sum_k l_k^(m-k) P_k(w) / P_m(w)`` is quasiconvex on
  ``C_m x R_+^m`` (midpoint form).
* ``G_1`` with ``f_k(l_k) = l_k^(p_k)``, ``p_k >= m-k``, is quasiconvex too.
* ``H(x, y) = ((x+y)^n - x^n)^-1`` is convex on the open quadrant, and the
  lift ``l^(n+1) H`` is jointly convex in ``(x, y, l)``.  Both hold for
  ``n >= 1``; for ``0 < n < 1`` the Hessian of ``H`` is indefinite near the
  origin and the checker reports the violations it finds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cone import ConeDomainError, in_cone, sample_cone_members
from .symfun import _check_order, as_symmetric, elem_sym_all, spectrum

QUASI_TOL = 1e-9
SCALAR_EIG_TOL = 1e-7
FD_STEP = 1e-3


@dataclass(frozen=True)
class ViolationReport:
    name: str
    cases: int
    violations: int
    worst_slack: float
    tol: float
    seed: int | None = None

    @property
    def passed(self):
        return self.violations == 0


def _powers(m, powers):
    if powers is None:
        return np.arange(m, 0, -1, dtype=float)
    p = np.asarray(powers, dtype=float)
    if p.shape != (m,):
        raise ValueError(f"expected {m} exponents, got {p.shape}")
    need = np.arange(m, 0, -1, dtype=float)
    if np.any(p < need):
        raise ValueError(f"exponents {p} must satisfy p_k >= m - k = {need}; otherwise f_k^(1/(m-k)) is not convex")
    return p


def g_from_spectra(lam, l, m, powers=None):
    """``sum_k l_k^(p_k) P_k / P_m`` on spectra ``lam``; ``p_k = m - k`` by default."""
    p = _powers(m, powers)
    e = elem_sym_all(lam)
    l = np.asarray(l, dtype=float)
    terms = l ** p * e[..., :m]
    return terms.sum(axis=-1) / e[..., m]


def g_value(w, l, m):
    w = as_symmetric(w)
    _check_order(w.shape[-1], m)
    l = np.asarray(l, dtype=float)
    if l.shape != (m,) or np.any(l < 0):
        raise ValueError("weights must be m nonnegative numbers")
    if not in_cone(w, m).inside:
        raise ConeDomainError(f"matrix is not in C_{m}")
    return float(g_from_spectra(spectrum(w), l, m))


def midpoint_slack(w1, l1, w2, l2, m, powers=None):
    """``max(G(w1,l1), G(w2,l2)) - G(midpoint)`` divided by ``max(1, values)``.

    Batched over leading axes; quasiconvexity says the result is >= 0.
    """
    w1 = np.asarray(w1, dtype=float)
    w2 = np.asarray(w2, dtype=float)
    g1 = g_from_spectra(spectrum(w1), l1, m, powers)
    g2 = g_from_spectra(spectrum(w2), l2, m, powers)
    gm = g_from_spectra(spectrum(0.5 * (w1 + w2)), 0.5 * (np.asarray(l1) + np.asarray(l2)), m, powers)
    top = np.maximum(g1, g2)
    scale = np.maximum(1.0, np.maximum(top, np.abs(gm)))
    return (top - gm) / scale


def sample_weights(rng, n, m, low=1e-3, high=10.0):
    return np.exp(rng.uniform(np.log(low), np.log(high), size=(n, m)))


def _sampled_midpoints(pair_count, seed, d, m, powers, name):
    if pair_count < 1:
        raise ValueError("pair_count must be positive")
    _check_order(d, m)
    p = _powers(m, powers)
    rng = np.random.default_rng(seed)
    w1 = sample_cone_members(rng, pair_count, d, m)
    w2 = sample_cone_members(rng, pair_count, d, m)
    l1 = sample_weights(rng, pair_count, m)
    l2 = sample_weights(rng, pair_count, m)
    slack = midpoint_slack(w1, l1, w2, l2, m, p)
    return ViolationReport(
        name=name,
        cases=pair_count,
        violations=int(np.sum(slack < -QUASI_TOL)),
        worst_slack=float(slack.min()),
        tol=QUASI_TOL,
        seed=seed,
    )


def quasiconvexity_check(pair_count, seed, d=2, m=2):
    """Midpoint test of ``G`` on ``pair_count`` random pairs from ``C_m x R_+^m``."""
    return _sampled_midpoints(pair_count, seed, d, m, None, f"quasiconvexity G d={d} m={m}")


def f_k_quasiconvexity_check(powers, pair_count, seed, d=2, m=2):
    """Midpoint test of ``G_1`` for the power family ``f_k(s) = s^(p_k)``."""
    p = _powers(m, powers)
    return _sampled_midpoints(pair_count, seed, d, m, p, f"quasiconvexity G_1 d={d} m={m} p={tuple(float(x) for x in p)}")


def _h(x, y, n):
    return 1.0 / ((x + y) ** n - x**n)


def lift_midpoint_slack(p1, p2, n):
    """Convexity slack of ``l^(n+1) H(x, y)`` at the midpoint of two points ``(x, y, l)``."""
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)

    def lift(p):
        return p[..., 2] ** (n + 1) * _h(p[..., 0], p[..., 1], n)

    mean = 0.5 * (lift(p1) + lift(p2))
    mid = lift(0.5 * (p1 + p2))
    return (mean - mid) / np.maximum(1.0, mean)


def scalar_convexity_check(n, grid=50, pairs=10_000, seed=0, step=FD_STEP):
    """Finite-difference Hessian test of ``H`` plus random midpoint tests of its lift.

    The Hessian test runs on a ``grid x grid`` lattice of ``(0, 10]^2`` with
    central differences of step ``step`` and flags eigenvalues below
    ``-1e-7``; the lift is sampled on ``(0, 10]^3``.  With the default step
    the difference Hessian is resolved well enough for ``1 <= n <= 6``; for
    larger n the truncation error near the origin exceeds the tolerance.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    ax = np.linspace(10.0 / grid, 10.0, grid)
    x, y = np.meshgrid(ax, ax, indexing="ij")
    h = step
    hxx = (_h(x + h, y, n) - 2 * _h(x, y, n) + _h(x - h, y, n)) / h**2
    hyy = (_h(x, y + h, n) - 2 * _h(x, y, n) + _h(x, y - h, n)) / h**2
    hxy = (_h(x + h, y + h, n) - _h(x + h, y - h, n) - _h(x - h, y + h, n) + _h(x - h, y - h, n)) / (4 * h * h)
    lmin = 0.5 * (hxx + hyy) - np.sqrt(0.25 * (hxx - hyy) ** 2 + hxy**2)
    hess_bad = int(np.sum(lmin < -SCALAR_EIG_TOL))

    rng = np.random.default_rng(seed)
    p1 = rng.uniform(0.0, 10.0, size=(pairs, 3))
    p2 = rng.uniform(0.0, 10.0, size=(pairs, 3))
    p1[:, :2] = np.maximum(p1[:, :2], 1e-3)
    p2[:, :2] = np.maximum(p2[:, :2], 1e-3)
    slack = lift_midpoint_slack(p1, p2, n)
    lift_bad = int(np.sum(slack < -QUASI_TOL))

    return ViolationReport(
        name=f"scalar convexity n={n}",
        cases=grid * grid + pairs,
        violations=hess_bad + lift_bad,
        worst_slack=float(min(lmin.min(), slack.min())),
        tol=SCALAR_EIG_TOL,
        seed=seed,
    )
