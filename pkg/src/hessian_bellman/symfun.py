"""Elementary symmetric functions of matrix spectra.

Everything here accepts batches: a matrix argument may have shape
``(..., d, d)`` and a spectrum argument shape ``(..., d)``.  Symmetric
matrices are plain ``ndarray`` objects; :func:`pack` and :func:`unpack`
convert to and from the packed lower-triangular layout.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

MAX_DIM = 6
JACOBI_TOL = 1e-13
JACOBI_MAX_SWEEPS = 50


class EigenConvergenceError(ArithmeticError):
    pass


def pack(w):
    """Packed lower-triangular entries (row major) of a symmetric matrix."""
    w = np.asarray(w, dtype=float)
    d = w.shape[-1]
    rows, cols = np.tril_indices(d)
    return w[..., rows, cols]


def unpack(entries, d):
    entries = np.asarray(entries, dtype=float)
    if entries.shape[-1] != d * (d + 1) // 2:
        raise ValueError(f"expected {d * (d + 1) // 2} packed entries, got {entries.shape[-1]}")
    out = np.zeros(entries.shape[:-1] + (d, d))
    rows, cols = np.tril_indices(d)
    out[..., rows, cols] = entries
    out[..., cols, rows] = entries
    return out


def as_symmetric(w):
    w = np.asarray(w, dtype=float)
    if w.ndim < 2 or w.shape[-1] != w.shape[-2]:
        raise ValueError(f"expected square matrices, got shape {w.shape}")
    if not np.all(np.isfinite(w)):
        raise ValueError("matrix has non-finite entries")
    if not np.allclose(w, np.swapaxes(w, -1, -2), rtol=0.0, atol=1e-12 * (1.0 + np.abs(w).max())):
        raise ValueError("matrix is not symmetric")
    return 0.5 * (w + np.swapaxes(w, -1, -2))


def jacobi_eigh(w, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    """Cyclic Jacobi eigendecomposition of a batch of symmetric matrices.

    Parameters
    ----------
    w : array_like, shape (..., d, d)
        Symmetric matrices.
    tol : float
        Sweeps stop once the off-diagonal Frobenius norm is at most
        ``tol`` times the Frobenius norm of the matrix.
    max_sweeps : int

    Returns
    -------
    values : ndarray, shape (..., d)
        Eigenvalues sorted ascending.
    vectors : ndarray, shape (..., d, d)
        Orthonormal eigenvectors stored as columns.
    """
    a = as_symmetric(w)
    batch_shape = a.shape[:-2]
    d = a.shape[-1]
    a = a.reshape((-1, d, d)).copy()
    v = np.broadcast_to(np.eye(d), a.shape).copy()
    scale = np.sqrt(np.einsum("nij,nij->n", a, a))
    off_mask = ~np.eye(d, dtype=bool)

    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(a[:, off_mask] ** 2, axis=1))
        if np.all(off <= tol * scale):
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[:, p, q]
                active = np.abs(apq) > 1e-300
                if not np.any(active):
                    continue
                safe = np.where(active, apq, 1.0)
                theta = (a[:, q, q] - a[:, p, p]) / (2.0 * safe)
                t = np.sign(theta) / (np.abs(theta) + np.hypot(theta, 1.0))
                t = np.where(theta == 0.0, 1.0, t)
                t = np.where(active, t, 0.0)
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                c_ = c[:, None]
                s_ = s[:, None]
                col_p = a[:, :, p].copy()
                col_q = a[:, :, q].copy()
                a[:, :, p] = c_ * col_p - s_ * col_q
                a[:, :, q] = s_ * col_p + c_ * col_q
                row_p = a[:, p, :].copy()
                row_q = a[:, q, :].copy()
                a[:, p, :] = c_ * row_p - s_ * row_q
                a[:, q, :] = s_ * row_p + c_ * row_q
                a[:, p, q] = 0.0
                a[:, q, p] = 0.0
                vp = v[:, :, p].copy()
                vq = v[:, :, q].copy()
                v[:, :, p] = c_ * vp - s_ * vq
                v[:, :, q] = s_ * vp + c_ * vq
    else:
        off = np.sqrt(np.sum(a[:, off_mask] ** 2, axis=1))
        if not np.all(off <= tol * scale):
            raise EigenConvergenceError(f"Jacobi sweeps did not converge in {max_sweeps} sweeps")

    values = np.diagonal(a, axis1=1, axis2=2).copy()
    order = np.argsort(values, axis=1, kind="stable")
    values = np.take_along_axis(values, order, axis=1)
    v = np.take_along_axis(v, order[:, None, :], axis=2)
    return values.reshape(batch_shape + (d,)), v.reshape(batch_shape + (d, d))


def spectrum(w):
    """Eigenvalues of ``w`` sorted ascending."""
    return jacobi_eigh(w)[0]


def elem_sym_all(lam):
    """All elementary symmetric polynomials ``e_0, ..., e_d`` of ``lam``.

    Built by multiplying out ``prod_i (1 + lam_i t)`` one factor at a time;
    every step adds products of like sign structure, so no power sums and no
    cancellation-prone divisions are involved.
    """
    lam = np.asarray(lam, dtype=float)
    d = lam.shape[-1]
    e = np.zeros(lam.shape[:-1] + (d + 1,))
    e[..., 0] = 1.0
    for i in range(d):
        x = lam[..., i : i + 1]
        e[..., 1 : i + 2] = e[..., 1 : i + 2] + x * e[..., 0 : i + 1]
    return e


def elem_sym(lam, k):
    """k-th elementary symmetric polynomial of the last axis of ``lam``."""
    lam = np.asarray(lam, dtype=float)
    d = lam.shape[-1]
    if not 0 <= k <= d:
        raise ValueError(f"k must lie in [0, {d}], got {k}")
    e = elem_sym_all(lam)[..., k]
    return float(e) if e.ndim == 0 else e


def elem_sym_newton_girard(lam, k):
    """Oracle: ``e_k`` from power sums via the Newton-Girard identities."""
    lam = np.asarray(lam, dtype=float)
    d = lam.shape[-1]
    if not 0 <= k <= d:
        raise ValueError(f"k must lie in [0, {d}], got {k}")
    p = [None] + [np.sum(lam**j, axis=-1) for j in range(1, k + 1)]
    e = [np.ones(lam.shape[:-1])]
    for j in range(1, k + 1):
        acc = np.zeros(lam.shape[:-1])
        for i in range(1, j + 1):
            acc = acc + (-1) ** (i - 1) * e[j - i] * p[i]
        e.append(acc / j)
    out = e[k]
    return float(out) if np.ndim(out) == 0 else out


def elem_sym_subsets(lam, k):
    """Oracle: ``e_k`` as the literal sum over k-subsets of products."""
    lam = np.asarray(lam, dtype=float)
    d = lam.shape[-1]
    if not 0 <= k <= d:
        raise ValueError(f"k must lie in [0, {d}], got {k}")
    out = np.zeros(lam.shape[:-1])
    for subset in itertools.combinations(range(d), k):
        out = out + np.prod(lam[..., list(subset)], axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def elem_sym_deleted(lam, k):
    """``e_k`` of ``lam`` with entry i removed, for every i.

    Returns shape ``(..., d)``; entry i equals ``dP_{k+1}/dlam_i``.
    """
    lam = np.asarray(lam, dtype=float)
    d = lam.shape[-1]
    out = np.empty(lam.shape)
    for i in range(d):
        rest = np.delete(lam, i, axis=-1)
        out[..., i] = elem_sym_all(rest)[..., k] if 0 <= k <= d - 1 else 0.0
    return out


def _check_order(d, m):
    if d < 2 or d > MAX_DIM:
        raise ValueError(f"dimension must lie in [2, {MAX_DIM}], got {d}")
    if not 1 <= m <= d:
        raise ValueError(f"order m must lie in [1, {d}], got {m}")


def pm_matrix(w, m):
    """``P_m`` of the eigenvalues of ``w``."""
    w = np.asarray(w, dtype=float)
    _check_order(w.shape[-1], m)
    return elem_sym(spectrum(w), m)


def k_matrix(v, m):
    """Gradient matrix ``K(v) = (dP_m / dv_ij)``, computed spectrally.

    With ``v = Q diag(lam) Q^T`` the gradient is ``Q diag(g) Q^T`` where
    ``g_i`` is ``P_{m-1}`` of the spectrum with ``lam_i`` deleted.
    """
    v = np.asarray(v, dtype=float)
    _check_order(v.shape[-1], m)
    lam, q = jacobi_eigh(v)
    grad = elem_sym_deleted(lam, m - 1)
    return np.einsum("...ik,...k,...jk->...ij", q, grad, q)


def directional_linear_coeff(v, eta, m, check=True):
    """Slope of ``t -> P_m(v + t eta eta^T)``, i.e. ``eta^T K(v) eta``.

    The map is affine in t because ``eta eta^T`` has rank one, so the
    central difference is exact for any step; with ``check`` the difference
    quotient is compared to the gradient-matrix route.
    """
    v = np.asarray(v, dtype=float)
    eta = np.asarray(eta, dtype=float)
    norm = np.linalg.norm(eta)
    if not math.isclose(norm, 1.0, rel_tol=0.0, abs_tol=1e-12):
        raise ValueError(f"eta must be a unit vector, |eta| = {norm}")
    slope = float(eta @ k_matrix(v, m) @ eta)
    if check:
        t = max(1.0, float(np.abs(v).max()))
        rank_one = np.outer(eta, eta)
        fd = (pm_matrix(v + t * rank_one, m) - pm_matrix(v - t * rank_one, m)) / (2.0 * t)
        scale = 1.0 + abs(slope) + t ** (m - 1) * math.comb(v.shape[-1], m)
        if abs(fd - slope) > 1e-8 * scale:
            raise ArithmeticError(f"gradient and difference slopes disagree: {slope} vs {fd}")
    return slope
