import math
import warnings

import numpy as np
import pytest

from hessian_bellman.bellman import build_control_net
from hessian_bellman.solver import (
    BellmanScheme,
    ConfigError,
    ConvergenceError,
    build_problem,
    discrete_bellman_operator,
    policy_iteration,
)
from hessian_bellman.solver.monitors import admissibility_audit, discrete_hessian


def disc_exact(x, c=1.0):
    return 0.5 * math.sqrt(c) * (np.sum(x * x, axis=1) - 1.0)


@pytest.fixture(scope="module")
def net22():
    return build_control_net(2, 2, 8, 8)


# problem construction -----------------------------------------------------------


def test_constant_problem_passes_assumption():
    p = build_problem("disc", 2, 2, 1 / 32, "constant")
    assert p.assumption.passed and p.assumption.K_needed == 0.0 and p.assumption.min_slack == 0.0


def test_radial_square_passes_with_k4():
    p = build_problem("disc", 2, 2, 1 / 32, "radial-square", K=4)
    assert p.assumption.passed and p.assumption.min_slack == 0.0


def test_radial_square_fails_with_small_k():
    with pytest.warns(UserWarning):
        p = build_problem("disc", 2, 2, 1 / 32, "radial-square", K=3.9)
    assert not p.assumption.gradient_ok


def test_zero_g_is_flagged():
    with pytest.warns(UserWarning, match="vanishes"):
        p = build_problem("disc", 2, 2, 1 / 16, "constant", g_value=0.0)
    assert not p.assumption.sup_ok


@pytest.mark.parametrize(
    "kwargs,field",
    [
        (dict(domain="square", g="constant", g_value=-1.0), "problem.g_value"),
        (dict(g="cubic"), "problem.g"),
        (dict(h=0.0), "problem.h"),
        (dict(h=0.3), "problem.h"),
        (dict(m=3), "problem.m"),
        (dict(domain="annulus"), "problem.domain"),
        (dict(d=3, m=2, h=1 / 32), "problem.h"),
        (dict(g="tabulated"), "problem.g_file"),
    ],
)
def test_config_errors_name_the_field(kwargs, field):
    with pytest.raises(ConfigError) as exc:
        build_problem(**kwargs)
    assert exc.value.field == field


def test_tabulated_g_matches_builtin():
    ref = build_problem("disc", 2, 2, 1 / 16, "radial-square")
    box = ref.grid.box_coords
    table = np.column_stack([box, np.sum(box**2, axis=1)])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        tab = build_problem("disc", 2, 2, 1 / 16, "tabulated", g_table=table, K=4)
    np.testing.assert_array_equal(tab.g, ref.g)
    assert tab.assumption.gradient_ok


def test_tabulated_g_must_cover_grid():
    with pytest.raises(ConfigError):
        build_problem("disc", 2, 2, 1 / 16, "tabulated", g_table=np.array([[0.0, 0.0, 1.0]]))


# scheme ------------------------------------------------------------------------------


def test_matrix_is_m_matrix(net22):
    p = build_problem("disc", 2, 2, 1 / 16, "constant")
    scheme = BellmanScheme(p, net22)
    rng = np.random.default_rng(0)
    policy = rng.integers(0, len(net22), p.grid.size)
    a = scheme.matrix(policy).tocoo()
    off = a.row != a.col
    assert np.all(a.data[off] <= 0)
    assert np.all(a.diagonal() > 0)
    assert np.all(np.asarray(scheme.matrix(policy).sum(axis=1)).ravel() >= -1e-9)
    np.testing.assert_allclose(a.diagonal(), scheme.diagonal(policy))


def test_matrix_agrees_with_operator(net22):
    p = build_problem("disc", 2, 2, 1 / 16, "radial-square")
    scheme = BellmanScheme(p, net22)
    rng = np.random.default_rng(1)
    u = rng.standard_normal(p.grid.size)
    policy = rng.integers(0, len(net22), p.grid.size)
    lu = scheme.control_values(u)[policy, np.arange(p.grid.size)] - scheme.rhs(policy)
    np.testing.assert_allclose(-scheme.matrix(policy) @ u, lu, atol=1e-9)


def test_operator_is_monotone(net22):
    """Raising a neighbour value never lowers the Bellman value at a node."""
    p = build_problem("disc", 2, 2, 1 / 16, "constant")
    scheme = BellmanScheme(p, net22)
    rng = np.random.default_rng(2)
    u = rng.standard_normal(p.grid.size)
    base, _ = scheme.bellman(u)
    bump = u + np.abs(rng.standard_normal(p.grid.size))
    bump[::7] = u[::7]
    new, _ = scheme.bellman(bump)
    assert np.all(new[::7] >= base[::7] - 1e-9)


def test_operator_examples(net22):
    p = build_problem("disc", 2, 2, 1 / 16, "constant")
    u = disc_exact(p.grid.coords)
    val, k = discrete_bellman_operator(u, 40, net22, p)
    assert abs(val) <= 1e-12 and k == 0
    val, k = discrete_bellman_operator(np.zeros(p.grid.size), 5, net22, p)
    assert val == pytest.approx(-1.0) and k == 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        pz = build_problem("disc", 2, 2, 1 / 16, "constant", g_value=0.0)
    assert discrete_bellman_operator(np.zeros(pz.grid.size), 5, net22, pz) == (0.0, 0)
    with pytest.raises(IndexError):
        discrete_bellman_operator(u, p.grid.size, net22, p)


def test_scheme_rejects_mismatched_net():
    p = build_problem("disc", 2, 2, 1 / 8, "constant")
    with pytest.raises(ValueError):
        BellmanScheme(p, build_control_net(3, 2, 1, 1))


# policy iteration --------------------------------------------------------------------


@pytest.mark.parametrize("h", [1 / 8, 1 / 16, 1 / 32])
def test_constant_rhs_reproduced(net22, h):
    p = build_problem("disc", 2, 2, h, "constant")
    rep = policy_iteration(p, net22)
    assert np.abs(rep.u - disc_exact(p.grid.coords)).max() <= 1e-12
    assert np.all(rep.u <= 0)


@pytest.mark.parametrize("c", [0.25, 4.0])
def test_constant_rhs_scaling(net22, c):
    p = build_problem("disc", 2, 2, 1 / 16, "constant", g_value=c)
    rep = policy_iteration(p, net22)
    np.testing.assert_allclose(rep.u, disc_exact(p.grid.coords, c), atol=1e-12)


def test_zero_rhs_gives_zero(net22):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        p = build_problem("disc", 2, 2, 1 / 16, "constant", g_value=0.0)
    rep = policy_iteration(p, net22)
    assert np.all(rep.u == 0.0)


def test_residual_history_decreases(net22):
    p = build_problem("disc", 2, 2, 1 / 32, "radial-square").shifted(1 / 16)
    rep = policy_iteration(p, net22)
    h = rep.residual_history
    assert len(h) > 2
    assert all(b < a for a, b in zip(h, h[1:]))
    assert rep.residual <= 1e-10


def test_comparison_principle(net22):
    p = build_problem("disc", 2, 2, 1 / 16, "radial-square").shifted(0.05)
    u1 = policy_iteration(p, net22).u
    u2 = policy_iteration(p.shifted(0.3), net22).u
    assert np.all(u2 <= u1 + 1e-10)


def test_linear_solvers_and_value_iteration_agree():
    net = build_control_net(2, 2, 4, 4)
    p = build_problem("disc", 2, 2, 1 / 16, "radial-square").shifted(1 / 16)
    ref = policy_iteration(p, net).u
    gs = policy_iteration(p, net, tol=1e-10, linear_solver="gauss-seidel").u
    vi = policy_iteration(p, net, tol=1e-11, method="value", max_iters=100_000).u
    assert np.abs(gs - ref).max() <= 1e-8
    assert np.abs(vi - ref).max() <= 1e-6


def test_non_convergence_carries_history(net22):
    p = build_problem("disc", 2, 2, 1 / 16, "radial-square").shifted(0.01)
    with pytest.raises(ConvergenceError) as exc:
        policy_iteration(p, net22, max_iters=1)
    assert len(exc.value.history) == 1 and exc.value.report is not None


def test_bad_arguments(net22):
    p = build_problem("disc", 2, 2, 1 / 8, "constant")
    for kw in (dict(method="newton"), dict(linear_solver="cg"), dict(tol=0.0)):
        with pytest.raises(ValueError):
            policy_iteration(p, net22, **kw)


@pytest.mark.parametrize("m", [2, 3])
def test_three_dimensional_constant_rhs(m):
    p = build_problem("disc", 3, m, 1 / 8, "constant")
    rep = policy_iteration(p, build_control_net(3, m, 4, 3))
    s = (1.0 / math.comb(3, m)) ** (1.0 / m)
    np.testing.assert_allclose(rep.u, 0.5 * s * (np.sum(p.grid.coords**2, axis=1) - 1.0), atol=1e-12)


def test_square_domain_runs(net22):
    p = build_problem("square", 2, 2, 1 / 16, "constant")
    rep = policy_iteration(p, net22)
    assert np.all(rep.u < 0)
    # symmetric under the dihedral group of the square
    n = p.grid.n
    full = np.zeros(n * n)
    full[p.grid.interior] = rep.u
    full = full.reshape(n, n)
    np.testing.assert_allclose(full, full.T, atol=1e-12)
    np.testing.assert_allclose(full, full[::-1], atol=1e-12)


# monitors ---------------------------------------------------------------------------


def test_discrete_hessian_exact_on_quadratic():
    p = build_problem("disc", 2, 2, 1 / 16, "constant")
    x = p.grid.coords
    a = np.array([[1.5, 0.25], [0.25, 0.5]])
    # stencils that stay inside never see the zero boundary value
    u = 0.5 * np.einsum("ni,ij,nj->n", x, a, x)
    hess, cut = discrete_hessian(u, p.grid)
    np.testing.assert_allclose(hess[~cut], np.broadcast_to(a, hess[~cut].shape), atol=1e-9)


def test_audit_examples():
    p = build_problem("disc", 2, 2, 1 / 16, "constant")
    u = disc_exact(p.grid.coords)
    good = admissibility_audit(u, p)
    assert good.fraction == 1.0 and good.worst_margin == pytest.approx(0.25)
    bad = admissibility_audit(-u, p)
    assert bad.fraction == 0.0


def test_monitors_on_exact_solution(net22):
    p = build_problem("disc", 2, 2, 1 / 32, "constant")
    mon = policy_iteration(p, net22).monitors
    assert mon.barrier_ratio == pytest.approx(1.0, abs=1e-10)
    assert mon.interior_D2_max == pytest.approx(1.0, abs=1e-9)
    assert mon.subharmonic_slack >= -1e-9
    assert mon.admissible_fraction == 1.0
    # u = -psi has inward normal derivative -1 on the circle
    assert -1.0 <= mon.min_boundary_normal_derivative <= mon.max_boundary_normal_derivative < -0.95
    assert mon.hopf_gamma > 0
