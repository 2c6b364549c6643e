"""Randomized property suites over the algebra, Bellman and convexity layers.

Every suite returns :class:`~hessian_bellman.quasi.ViolationReport` rows.
Random streams are seeded per ``(seed, d, m)`` so each row is reproducible
on its own.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import quasi
from .bellman import bellman_residual, build_control_net, control_values, log_concavity_slack, mth_root
from .cone import (
    in_cone_spectra,
    random_orthogonal,
    random_symmetric,
    sample_cone_members,
)
from .quasi import ViolationReport
from .symfun import elem_sym_all, elem_sym_newton_girard, elem_sym_subsets, k_matrix, spectrum

ORDERS = [(d, m) for d in range(2, 7) for m in range(2, d + 1)]
QUASI_ORDERS = [(2, 2), (3, 2), (3, 3), (4, 3)]


def _rng(seed, *key):
    return np.random.default_rng([seed, *key])


def _report(name, slack, tol, seed):
    slack = np.asarray(slack, dtype=float).ravel()
    return ViolationReport(name=name, cases=int(slack.size), violations=int(np.sum(slack < -tol)),
                           worst_slack=float(slack.min()) if slack.size else 0.0, tol=tol, seed=seed)


def _abs_sym(lam, k):
    """``e_k(|lam|)``: the size of the terms summed in ``e_k(lam)``."""
    return elem_sym_all(np.abs(lam))[..., k]


def _vec(slacks):
    return np.concatenate([np.ravel(s) for s in slacks])


# algebra ----------------------------------------------------------------------


def trace_identity(cases, seed):
    out = []
    for d, m in ORDERS:
        v = random_symmetric(_rng(seed, d, m, 1), cases, d)
        lam = spectrum(v)
        tr = np.trace(k_matrix(v, m), axis1=1, axis2=2)
        rhs = (d - m + 1) * elem_sym_all(lam)[:, m - 1]
        scale = (d - m + 1) * _abs_sym(lam, m - 1)
        out.append(-np.abs(tr - rhs) / np.maximum(scale, 1e-300))
    return _report("trace identity Tr K = (d-m+1) P_{m-1}", _vec(out), 1e-10, seed)


def orthogonal_invariance(cases, seed):
    out = []
    for d, m in ORDERS:
        rng = _rng(seed, d, m, 2)
        w = random_symmetric(rng, cases, d)
        q = random_orthogonal(rng, cases, d)
        rot = q @ w @ np.swapaxes(q, 1, 2)
        p = elem_sym_all(spectrum(w))[:, m]
        pr = elem_sym_all(spectrum(rot))[:, m]
        out.append(-np.abs(p - pr) / (1.0 + np.abs(p)))
    return _report("orthogonal invariance of P_m", _vec(out), 1e-9, seed)


def k_equivariance(cases, seed):
    out = []
    for d, m in ORDERS:
        rng = _rng(seed, d, m, 3)
        v = random_symmetric(rng, cases, d)
        q = random_orthogonal(rng, cases, d)
        qt = np.swapaxes(q, 1, 2)
        lhs = k_matrix(q @ v @ qt, m)
        rhs = q @ k_matrix(v, m) @ qt
        err = np.abs(lhs - rhs).max(axis=(1, 2))
        out.append(-err / (1.0 + np.abs(rhs).max(axis=(1, 2))))
    return _report("equivariance K(QvQ^T) = Q K(v) Q^T", _vec(out), 1e-9, seed)


def homogeneity(cases, seed):
    out = []
    for d, m in ORDERS:
        rng = _rng(seed, d, m, 4)
        w = random_symmetric(rng, cases, d)
        s = np.exp(rng.uniform(np.log(0.1), np.log(10.0), size=cases))
        lam = spectrum(w)
        ps = elem_sym_all(spectrum(s[:, None, None] * w))[:, m]
        expect = s**m * elem_sym_all(lam)[:, m]
        scale = s**m * _abs_sym(lam, m)
        out.append(-np.abs(ps - expect) / np.maximum(scale, 1e-300))
    return _report("homogeneity P_m(s w) = s^m P_m(w)", _vec(out), 1e-10, seed)


def symmetric_function_oracles(cases, seed):
    """Product expansion against Newton-Girard and the subset sum."""
    out = []
    for d in range(2, 7):
        lam = _rng(seed, d, 0, 5).uniform(-1.0, 1.0, size=(cases, d))
        e = elem_sym_all(lam)
        for k in range(d + 1):
            scale = np.maximum(_abs_sym(lam, k), 1.0)
            ng = elem_sym_newton_girard(lam, k)
            sub = elem_sym_subsets(lam, k)
            out.append(-np.maximum(np.abs(e[:, k] - ng), np.abs(e[:, k] - sub)) / scale)
    return _report("P_k: product expansion = Newton-Girard = subset sum", _vec(out), 1e-11, seed)


def superadditivity(cases, seed):
    out = []
    for d, m in ORDERS:
        rng = _rng(seed, d, m, 6)
        v = sample_cone_members(rng, cases, d, m)
        w = sample_cone_members(rng, cases, d, m)
        pv = elem_sym_all(spectrum(v))[:, m]
        pw = elem_sym_all(spectrum(w))[:, m]
        pvw = elem_sym_all(spectrum(v + w))[:, m]
        out.append((pvw - pv - pw) / np.maximum(1.0, pvw))
    return _report("superadditivity P_m(v+w) >= P_m(v) + P_m(w)", _vec(out), 1e-10, seed)


def cone_nesting(cases, seed):
    """``C_m`` inside ``C_k`` for ``k < m``, over cone members and raw samples."""
    bad = []
    for d, m in ORDERS:
        rng = _rng(seed, d, m, 7)
        w = np.concatenate([sample_cone_members(rng, cases, d, m), random_symmetric(rng, cases, d)])
        lam = spectrum(w)
        inside = in_cone_spectra(lam, m)
        for k in range(1, m):
            bad.append(np.where(inside & ~in_cone_spectra(lam, k), -1.0, 0.0))
    return _report("cone nesting C_m in C_k, k < m", _vec(bad), 0.5, seed)


def principal_submatrices(cases, seed):
    """Every principal ``(d-1)``-submatrix of a ``C_{m,d}`` member lies in ``C_{m-1,d-1}``."""
    bad = []
    for d, m in ORDERS:
        w = sample_cone_members(_rng(seed, d, m, 8), cases, d, m)
        ok = np.ones(cases, dtype=bool)
        for k in range(d):
            keep = [i for i in range(d) if i != k]
            sub = w[:, keep][:, :, keep]
            lam = spectrum(sub) if d > 2 else sub[:, :, 0]
            ok &= in_cone_spectra(lam, m - 1)
        bad.append(np.where(ok, 0.0, -1.0))
    return _report("principal submatrices in C_{m-1,d-1}", _vec(bad), 0.5, seed)


def ray_connectivity(cases, seed, points=100):
    """The segment from ``I`` to a cone member stays in ``{P_1, ..., P_m > 0}``."""
    out = []
    s = np.linspace(0.0, 1.0, points)
    for d, m in ORDERS:
        w = sample_cone_members(_rng(seed, d, m, 9), cases, d, m)
        lam = spectrum(w)
        path = (1.0 - s)[None, :, None] + s[None, :, None] * lam[:, None, :]
        e = elem_sym_all(path)[..., 1 : m + 1]
        out.append(np.where(np.all(e > 0.0, axis=-1), 0.0, -1.0))
    return _report("ray connectivity of the cone test", _vec(out), 0.5, seed)


def midpoint_convexity(cases, seed):
    bad = []
    for d, m in ORDERS:
        rng = _rng(seed, d, m, 10)
        v = sample_cone_members(rng, cases, d, m)
        w = sample_cone_members(rng, cases, d, m)
        bad.append(np.where(in_cone_spectra(spectrum(0.5 * (v + w)), m), 0.0, -1.0))
    return _report("convexity of C_m (midpoints)", _vec(bad), 0.5, seed)


def trace_positivity(cases, seed):
    out = []
    for d, m in ORDERS:
        w = sample_cone_members(_rng(seed, d, m, 11), cases, d, m)
        out.append(np.where(np.trace(w, axis1=1, axis2=2) > 0.0, 0.0, -1.0))
    return _report("P_1 > 0 on C_m", _vec(out), 0.5, seed)


def algebra_suite(cases=1000, seed=1):
    return [
        trace_identity(cases, seed),
        orthogonal_invariance(cases, seed),
        k_equivariance(cases, seed),
        homogeneity(cases, seed),
        symmetric_function_oracles(cases, seed),
        superadditivity(cases, seed),
        cone_nesting(cases, seed),
        principal_submatrices(cases, seed),
        ray_connectivity(cases, seed),
        midpoint_convexity(cases, seed),
        trace_positivity(cases, seed),
    ]


# Bellman layer ----------------------------------------------------------------

BELLMAN_ORDERS = [(2, 2), (3, 2), (3, 3), (4, 2), (4, 3), (4, 4)]


def _net(d, m):
    if d == 2:
        return build_control_net(d, m, 4, 8)
    if d == 3:
        return build_control_net(d, m, 7, 4)
    return build_control_net(d, m, 1, 6)


def aligned_values(v, c, m):
    """``Tr(a(w) v) - kappa(w) c^(1/m)`` at ``w = v``, batched over ``v``."""
    d = v.shape[-1]
    lam = spectrum(v)
    k = k_matrix(v, m)
    a = k / np.trace(k, axis1=-2, axis2=-1)[..., None, None]
    e = elem_sym_all(lam)
    kap = m / (d - m + 1) * e[..., m] ** (1.0 - 1.0 / m) / e[..., m - 1]
    return np.einsum("...ij,...ij->...", a, v) - kap * mth_root(c, m)


def bellman_characterization(cases, seed):
    """Residual at ``c = P_m(v)``: nonnegative on any net, zero once ``v`` is a control.

    Returns the lower-bound row and the attained-infimum row.
    """
    lower, attained = [], []
    for d, m in BELLMAN_ORDERS:
        net = _net(d, m)
        v = sample_cone_members(_rng(seed, d, m, 12), cases, d, m)
        c = elem_sym_all(spectrum(v))[:, m]
        best = control_values(v, c, net).min(axis=1)
        lower.append(best)
        attained.append(-np.minimum(best, aligned_values(v, c, m)))
    return [
        _report("Bellman residual >= 0 at c = P_m(v)", _vec(lower), 1e-10, seed),
        _report("Bellman residual ~ 0 with the v-aligned control", _vec(attained), 1e-8, seed),
    ]


def bellman_strict_case():
    """``v = I_2``, ``c = 4 > P_2(v) = 1``: the residual is at most ``-1``."""
    net = build_control_net(2, 2, 1, 1)
    r = bellman_residual(np.eye(2), 4.0, net)
    return ViolationReport(name="Bellman residual <= -0.5 for v = I_2, c = 4", cases=1,
                           violations=int(r > -0.5), worst_slack=-0.5 - r, tol=0.0)


def gradient_trace_positivity(cases, seed):
    out = []
    for d, m in ORDERS:
        rng = _rng(seed, d, m, 13)
        v = sample_cone_members(rng, cases, d, m)
        w = sample_cone_members(rng, cases, d, m)
        t = np.einsum("nij,nij->n", k_matrix(v, m), w)
        out.append(np.where(t > 0.0, 0.0, -1.0))
    return _report("Tr(K(v) w) > 0 on cone pairs", _vec(out), 0.5, seed)


def coefficient_equivariance(cases, seed):
    out = []
    for d, m in ORDERS:
        rng = _rng(seed, d, m, 14)
        w = sample_cone_members(rng, cases, d, m)
        q = random_orthogonal(rng, cases, d)
        qt = np.swapaxes(q, 1, 2)
        k1 = k_matrix(q @ w @ qt, m)
        k0 = k_matrix(w, m)
        a1 = k1 / np.trace(k1, axis1=1, axis2=2)[:, None, None]
        a0 = q @ (k0 / np.trace(k0, axis1=1, axis2=2)[:, None, None]) @ qt
        out.append(-np.abs(a1 - a0).max(axis=(1, 2)))
    return _report("equivariance a(QwQ^T) = Q a(w) Q^T", _vec(out), 1e-9, seed)


def refinement_monotone(cases, seed):
    """Adding frames never raises the residual."""
    out = []
    for d, m, frames in ((2, 2, (1, 2, 4, 8)), (3, 2, (1, 4, 7, 14)), (3, 3, (1, 4, 7, 14))):
        nets = [build_control_net(d, m, f, 4) for f in frames]
        rng = _rng(seed, d, m, 15)
        v = random_symmetric(rng, cases, d)
        c = np.exp(rng.uniform(-3.0, 1.0, size=cases))
        res = np.stack([control_values(v, c, net).min(axis=1) for net in nets])
        out.append(res[:-1] - res[1:])
    return _report("residual non-increasing under net refinement", _vec(out), 0.0, seed)


def log_concavity(cases, seed):
    out = []
    for d, m in ORDERS:
        w = sample_cone_members(_rng(seed, d, m, 16), cases, d, m)
        out.append(log_concavity_slack(spectrum(w), m))
    return _report("P_k / C(d,k) log-concave in k", _vec(out), 1e-10, seed)


def bellman_suite(cases=1000, seed=1):
    return [
        *bellman_characterization(cases, seed),
        bellman_strict_case(),
        gradient_trace_positivity(cases, seed),
        coefficient_equivariance(cases, seed),
        refinement_monotone(cases, seed),
        log_concavity(cases, seed),
    ]


# convexity --------------------------------------------------------------------


def ratio_concavity(cases, seed):
    """``P_k / P_{k-1}`` is concave on ``C_m`` for ``k <= m`` (midpoint form)."""
    out = []
    for d, m in ORDERS:
        rng = _rng(seed, d, m, 17)
        v = sample_cone_members(rng, cases, d, m)
        w = sample_cone_members(rng, cases, d, m)
        ev, ew, emid = (elem_sym_all(spectrum(x)) for x in (v, w, 0.5 * (v + w)))
        for k in range(2, m + 1):
            rv, rw, rm = (e[:, k] / e[:, k - 1] for e in (ev, ew, emid))
            out.append((rm - 0.5 * (rv + rw)) / np.maximum(1.0, np.abs(rm)))
    return _report("concavity of P_k / P_{k-1}", _vec(out), 1e-9, seed)


def sublevel_convexity(cases, seed):
    """``G <= 1`` at both ends implies ``G <= 1`` at the midpoint."""
    out = []
    for d, m in QUASI_ORDERS:
        rng = _rng(seed, d, m, 18)
        w1 = sample_cone_members(rng, cases, d, m)
        w2 = sample_cone_members(rng, cases, d, m)
        l1 = quasi.sample_weights(rng, cases, m)
        l2 = quasi.sample_weights(rng, cases, m)
        g1 = quasi.g_from_spectra(spectrum(w1), l1, m)
        g2 = quasi.g_from_spectra(spectrum(w2), l2, m)
        # rescale weights so that both ends sit on the level set G = 1
        p = np.arange(m, 0, -1, dtype=float)
        l1 = l1 / g1[:, None] ** (1.0 / p)
        l2 = l2 / g2[:, None] ** (1.0 / p)
        gm = quasi.g_from_spectra(spectrum(0.5 * (w1 + w2)), 0.5 * (l1 + l2), m)
        out.append(1.0 - gm)
    return _report("sublevel sets {G <= 1} convex", _vec(out), 1e-9, seed)


def convexity_suite(pairs=10_000, seed=1, cases=1000):
    rows = [quasi.quasiconvexity_check(pairs, seed, d, m) for d, m in QUASI_ORDERS]
    rows.append(quasi.f_k_quasiconvexity_check((3.0, 1.5), pairs, seed, 2, 2))
    rows += [quasi.scalar_convexity_check(n, pairs=pairs, seed=seed) for n in (1, 2, 3)]
    rows.append(ratio_concavity(cases, seed))
    rows.append(sublevel_convexity(pairs, seed))
    return rows


SUITES = {
    "algebra": algebra_suite,
    "bellman": bellman_suite,
    "convexity": convexity_suite,
}


def run_all(pairs=10_000, seed=1, cases=1000, workers=1):
    """Every suite; ``workers`` runs suites concurrently without changing results."""
    jobs = [
        ("algebra", lambda: algebra_suite(cases, seed)),
        ("bellman", lambda: bellman_suite(cases, seed)),
        ("convexity", lambda: convexity_suite(pairs, seed, cases)),
    ]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [(name, pool.submit(job)) for name, job in jobs]
            return [(name, row) for name, fut in futures for row in fut.result()]
    return [(name, row) for name, job in jobs for row in job()]


def format_table(rows):
    width = max(len(r.name) for _, r in rows)
    lines = [f"{'suite':<10} {'property':<{width}} {'cases':>7} {'viol':>5} {'worst slack':>12} {'seed':>5} status"]
    for suite, r in rows:
        seed = "-" if r.seed is None else str(r.seed)
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"{suite:<10} {r.name:<{width}} {r.cases:>7} {r.violations:>5} {r.worst_slack:>12.3e} "
                     f"{seed:>5} {status}")
    return "\n".join(lines)
