import math

import numpy as np
import pytest

from hessian_bellman.bellman import build_control_net
from hessian_bellman.solver import build_problem, policy_iteration
from hessian_bellman.solver.ladder import LadderError, degeneracy_ladder


@pytest.fixture(scope="module")
def net():
    return build_control_net(2, 2, 8, 8)


def test_single_rung_is_one_shifted_solve(net):
    p = build_problem("disc", 2, 2, 1 / 16, "radial-square")
    lad = degeneracy_ladder(p, [1], net)
    direct = policy_iteration(p.shifted(0.5), net)
    np.testing.assert_array_equal(lad.final.u, direct.u)
    assert lad.top_half == [0] and lad.d2_variation == 0.0


def test_constant_rhs_rungs_match_closed_form(net):
    """For g = 1 the rung solution is sqrt(1 + 1/(2n)) (|x|^2 - 1) / 2."""
    p = build_problem("disc", 2, 2, 1 / 16, "constant")
    base = policy_iteration(p, net).u
    lad = degeneracy_ladder(p, [2, 8, 32], net)
    r2 = np.sum(p.grid.coords**2, axis=1)
    for rung in lad.rungs:
        exact = 0.5 * math.sqrt(1 + 1 / (2 * rung.n)) * (r2 - 1)
        np.testing.assert_allclose(rung.report.u, exact, atol=1e-12)
        # Lipschitz bound of c -> c^(1/2) near 1, times sup |(|x|^2 - 1) / 2|
        assert np.abs(rung.report.u - base).max() <= 0.5 * 0.5 / (2 * rung.n) + 1e-12


def test_ladder_distances_shrink(net):
    p = build_problem("disc", 2, 2, 1 / 16, "radial-square")
    lad = degeneracy_ladder(p, [4, 16, 64], net)
    assert lad.distances.shape == (3, 3)
    assert lad.distances[1, 2] < lad.distances[0, 1]
    np.testing.assert_array_equal(lad.distances, lad.distances.T)
    assert lad.top_half == [1, 2]
    assert lad.c11_ok


@pytest.mark.parametrize("n_list", [[], [8, 4], [0, 2], [4, 4]])
def test_ladder_rejects_bad_lists(net, n_list):
    p = build_problem("disc", 2, 2, 1 / 8, "constant")
    with pytest.raises(ValueError):
        degeneracy_ladder(p, n_list, net)


def test_failed_rung_keeps_partial_report(net, monkeypatch):
    import hessian_bellman.solver.ladder as ladder

    real = ladder.policy_iteration

    def flaky(problem, *args, **kwargs):
        if problem.g_params["shift"] < 0.1:
            raise ladder.ConvergenceError("forced", [1.0])
        return real(problem, *args, **kwargs)

    monkeypatch.setattr(ladder, "policy_iteration", flaky)
    p = build_problem("disc", 2, 2, 1 / 16, "radial-square")
    with pytest.raises(LadderError) as exc:
        degeneracy_ladder(p, [1, 64], net)
    assert [r.n for r in exc.value.report.rungs] == [1]


def test_ladder_propagates_real_non_convergence(net):
    p = build_problem("disc", 2, 2, 1 / 16, "radial-square")
    with pytest.raises(LadderError, match="n=1"):
        degeneracy_ladder(p, [1, 64], net, max_iters=2)
