import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hessian_bellman.symfun import (
    EigenConvergenceError,
    as_symmetric,
    directional_linear_coeff,
    elem_sym,
    elem_sym_all,
    elem_sym_newton_girard,
    elem_sym_subsets,
    jacobi_eigh,
    k_matrix,
    pack,
    pm_matrix,
    spectrum,
    unpack,
)

from helpers import rotation


def brute_elem_sym(lam, k):
    return sum(math.prod(c) for c in itertools.combinations(lam, k))


@pytest.mark.parametrize(
    "lam,k,expected",
    [((1, 1, 1), 2, 3), ((1, 2, 3), 2, 11), ((1, 2, 3), 0, 1), ((1, 2, 3), 3, 6), ((2, -1), 1, 1)],
)
def test_elem_sym_examples(lam, k, expected):
    assert elem_sym(lam, k) == pytest.approx(expected, abs=1e-14)


@pytest.mark.parametrize("k", [-1, 4])
def test_elem_sym_out_of_range(k):
    with pytest.raises(ValueError):
        elem_sym([1.0, 2.0, 3.0], k)


def test_elem_sym_constant_vector_is_binomial():
    for d in range(2, 7):
        for k in range(d + 1):
            assert elem_sym(np.ones(d), k) == pytest.approx(math.comb(d, k))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-3, 3, allow_nan=False), min_size=2, max_size=6))
def test_elem_sym_matches_literal_subsets(lam):
    for k in range(len(lam) + 1):
        want = brute_elem_sym(lam, k)
        scale = max(1.0, brute_elem_sym([abs(x) for x in lam], k))
        assert abs(elem_sym(lam, k) - want) <= 1e-12 * scale
        assert abs(elem_sym_newton_girard(lam, k) - want) <= 1e-11 * scale
        assert abs(elem_sym_subsets(lam, k) - want) <= 1e-12 * scale


def test_pack_roundtrip(rng):
    a = rng.standard_normal((4, 4))
    w = a + a.T
    entries = pack(w)
    assert entries.shape == (10,)
    np.testing.assert_array_equal(unpack(entries, 4), w)


def test_as_symmetric_rejects_asymmetric():
    with pytest.raises(ValueError):
        as_symmetric(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_jacobi_matches_lapack(rng):
    for d in range(2, 7):
        a = rng.uniform(-1, 1, (200, d, d))
        a = a + np.swapaxes(a, 1, 2)
        lam, q = jacobi_eigh(a)
        np.testing.assert_allclose(lam, np.linalg.eigvalsh(a), atol=1e-13)
        recon = np.einsum("nik,nk,njk->nij", q, lam, q)
        np.testing.assert_allclose(recon, a, atol=1e-13)
        assert np.all(np.diff(lam, axis=1) >= 0)


def test_jacobi_reports_non_convergence():
    a = np.array([[1.0, 0.7, 0.3], [0.7, -2.0, 0.5], [0.3, 0.5, 0.1]])
    with pytest.raises(EigenConvergenceError):
        jacobi_eigh(a, max_sweeps=1, tol=1e-300)


def test_pm_matrix_examples():
    assert pm_matrix(np.eye(3), 2) == pytest.approx(3.0)
    assert pm_matrix(np.diag([1.0, 2.0, 3.0]), 3) == pytest.approx(6.0)
    r = rotation(np.pi / 6)
    assert pm_matrix(r @ np.diag([1.0, 2.0]) @ r.T, 2) == pytest.approx(2.0, abs=1e-14)


def test_pm_matrix_equals_determinant(rng):
    a = rng.uniform(-1, 1, (50, 5, 5))
    a = a + np.swapaxes(a, 1, 2)
    np.testing.assert_allclose(pm_matrix(a, 5), np.linalg.det(a), atol=1e-12)


def test_k_matrix_examples():
    np.testing.assert_allclose(k_matrix(np.eye(4), 4), np.eye(4), atol=1e-14)
    np.testing.assert_allclose(k_matrix(np.eye(3), 2), 2 * np.eye(3), atol=1e-14)
    np.testing.assert_allclose(k_matrix(np.diag([1.0, 2.0, 3.0]), 2), np.diag([5.0, 4.0, 3.0]), atol=1e-14)


def test_k_matrix_is_entrywise_gradient(rng):
    """Central differences of P_m in the symmetric entry directions."""
    v = rng.uniform(-1, 1, (4, 4))
    v = v + v.T
    k = k_matrix(v, 3)
    eps = 1e-6
    for i in range(4):
        for j in range(i, 4):
            e = np.zeros((4, 4))
            e[i, j] = e[j, i] = 1.0
            fd = (pm_matrix(v + eps * e, 3) - pm_matrix(v - eps * e, 3)) / (2 * eps)
            want = k[i, i] if i == j else 2 * k[i, j]
            assert fd == pytest.approx(want, abs=1e-7)


def test_k_matrix_of_det_is_cofactor(rng):
    a = rng.uniform(-1, 1, (3, 3))
    a = a + a.T + 3 * np.eye(3)
    np.testing.assert_allclose(k_matrix(a, 3), np.linalg.det(a) * np.linalg.inv(a), atol=1e-12)


def test_directional_coefficient_examples():
    e1, e3 = np.eye(3)[0], np.eye(3)[2]
    assert directional_linear_coeff(np.eye(3), e1, 2) == pytest.approx(2.0)
    assert directional_linear_coeff(np.diag([1.0, 2.0, 3.0]), e3, 2) == pytest.approx(3.0)


def test_directional_coefficient_positive_in_cone(rng):
    from hessian_bellman.cone import sample_cone_members

    for d, m in [(2, 2), (3, 2), (4, 3), (5, 5)]:
        for w in sample_cone_members(rng, 30, d, m):
            eta = rng.standard_normal(d)
            eta /= np.linalg.norm(eta)
            assert directional_linear_coeff(w, eta, m) > 0


def test_directional_coefficient_requires_unit_vector():
    with pytest.raises(ValueError):
        directional_linear_coeff(np.eye(2), np.array([1.0, 1.0]), 2)


def test_order_validation():
    with pytest.raises(ValueError):
        pm_matrix(np.eye(3), 4)
    with pytest.raises(ValueError):
        pm_matrix(np.eye(7), 2)


def test_spectrum_sorted():
    lam = spectrum(np.diag([3.0, -1.0, 2.0]))
    np.testing.assert_array_equal(lam, [-1.0, 2.0, 3.0])
    np.testing.assert_allclose(elem_sym_all(lam), [1, 4, 1, -6])
