import itertools

import numpy as np
import pytest

from hessian_bellman.cone import (
    ConeDomainError,
    admissible,
    cone_root,
    cone_root_spectra,
    in_cone,
    random_orthogonal,
    sample_cone_members,
    spectral_margin,
    submatrix_cone_check,
)
from hessian_bellman.symfun import pm_matrix


def brute_in_cone(lam, m):
    """Literal subset sums P_1..P_m all positive."""
    return all(sum(np.prod(c) for c in itertools.combinations(lam, k)) > 0 for k in range(1, m + 1))


def test_identity_inside_and_negative_identity_outside():
    for d in range(2, 7):
        assert in_cone(np.eye(d), 2).inside
        assert not in_cone(-np.eye(d), 2).inside


def test_cone_strictly_contains_positive_definite():
    v = in_cone(np.diag([3.0, 1.0, -0.5]), 2)
    assert v.inside and v.margin > 0
    assert not in_cone(np.diag([3.0, 1.0, -0.5]), 3).inside


def test_verdict_margin_is_trace_normalized():
    a, b = in_cone(np.eye(3), 2), in_cone(7.0 * np.eye(3), 2)
    assert a.margin == pytest.approx(b.margin)
    assert a.margin == pytest.approx(1.0 / 3.0)


@pytest.mark.parametrize(
    "w,m,t0",
    [(np.eye(3), 2, -1.0), (np.diag([1.0, -1.0]), 2, 1.0), (np.zeros((3, 3)), 3, 0.0), (np.diag([1.0, 2.0]), 2, -1.0)],
)
def test_cone_root_closed_forms(w, m, t0):
    assert cone_root(w, m) == pytest.approx(t0, abs=1e-12)


def test_cone_root_consistency(rng):
    for d, m in [(2, 2), (3, 2), (3, 3), (5, 3), (6, 6)]:
        a = rng.uniform(-1, 1, (40, d, d))
        a = a + np.swapaxes(a, 1, 2)
        for w in a:
            t0 = cone_root(w, m)
            assert in_cone(w + (t0 + 1e-6) * np.eye(d), m).inside
            assert not in_cone(w + (t0 - 1e-6) * np.eye(d), m).inside
            assert abs(pm_matrix(w + t0 * np.eye(d), m)) <= 1e-9 * (1 + np.abs(w).max()) ** m


def test_cone_root_is_largest_real_root(rng):
    """Against numpy roots of the polynomial t -> P_m(lam + t)."""
    for _ in range(50):
        lam = rng.uniform(-2, 2, 4)
        for m in (2, 3, 4):
            coeffs = np.zeros(m + 1)
            for subset in itertools.combinations(lam, m):
                coeffs = coeffs + np.poly(-np.array(subset))
            roots = np.roots(coeffs)
            real = roots[np.abs(roots.imag) < 1e-9].real
            assert cone_root_spectra(lam, m) == pytest.approx(real.max(), abs=1e-7)


def test_admissible_examples():
    assert admissible(np.zeros((3, 3)), 2)
    assert not admissible(np.diag([1.0, -1.0]), 2)
    assert admissible(np.eye(4), 3)
    assert admissible(np.diag([1.0, -1.0]), 2, tol=1.0)
    with pytest.raises(ValueError):
        admissible(np.eye(2), 2, tol=-1.0)


def test_submatrix_examples():
    assert submatrix_cone_check(np.eye(3), 2)
    assert submatrix_cone_check(np.diag([3.0, 1.0, -0.5]), 2)
    assert not submatrix_cone_check(np.diag([3.0, 3.0, -0.5]), 3)


def test_submatrices_of_members(rng):
    for d, m in [(2, 2), (3, 2), (3, 3), (4, 3), (5, 4)]:
        for w in sample_cone_members(rng, 40, d, m):
            assert submatrix_cone_check(w, m)


def test_samples_are_members(rng):
    w = sample_cone_members(rng, 100, 4, 3)
    assert np.all([in_cone(x, 3).inside for x in w])


def test_cone_is_rotation_invariant(rng):
    w = sample_cone_members(rng, 100, 3, 2)
    q = random_orthogonal(rng, 100, 3)
    rot = q @ w @ np.swapaxes(q, 1, 2)
    np.testing.assert_allclose(spectral_margin(np.linalg.eigvalsh(rot), 2),
                               spectral_margin(np.linalg.eigvalsh(w), 2), atol=1e-12)


def test_random_orthogonal_is_orthogonal(rng):
    q = random_orthogonal(rng, 20, 5)
    np.testing.assert_allclose(q @ np.swapaxes(q, 1, 2), np.broadcast_to(np.eye(5), q.shape), atol=1e-12)


def test_membership_matches_positivity_chain(rng):
    for _ in range(300):
        lam = rng.uniform(-1, 1, 4)
        for m in (2, 3, 4):
            want = brute_in_cone(lam, m)
            got = in_cone(np.diag(lam), m).inside
            if abs(spectral_margin(lam, m)) > 1e-10:
                assert got == want


def test_cone_domain_error_is_value_error():
    assert issubclass(ConeDomainError, ValueError)
