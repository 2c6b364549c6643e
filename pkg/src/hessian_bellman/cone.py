"""Garding cone membership, closure tests and cone-boundary shifts.

Membership in ``C_m`` is decided by positivity of ``P_1, ..., P_m`` on the
spectrum.  Margins are measured after dividing the spectrum by its l1 norm
(the trace, for positive semidefinite matrices), so they are scale free.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .symfun import _check_order, as_symmetric, elem_sym_all, spectrum

INTERIOR_MARGIN = 1e-12
CLOSURE_MARGIN = -1e-9
ROOT_BRACKET_LIMIT = 1e6


class ConeDomainError(ValueError):
    """An argument that must lie in the Garding cone does not."""


@dataclass(frozen=True)
class ConeVerdict:
    inside: bool
    margin: float
    boundary_distance_t: float


def spectral_margin(lam, m):
    """``min_{1<=k<=m} P_k(lam / |lam|_1)``; zero for the zero spectrum."""
    lam = np.asarray(lam, dtype=float)
    l1 = np.sum(np.abs(lam), axis=-1, keepdims=True)
    safe = np.where(l1 > 0.0, l1, 1.0)
    e = elem_sym_all(lam / safe)[..., 1 : m + 1]
    out = np.where(l1[..., 0] > 0.0, e.min(axis=-1), 0.0)
    return float(out) if out.ndim == 0 else out


def in_cone_spectra(lam, m, margin=INTERIOR_MARGIN):
    return spectral_margin(lam, m) > margin


def _inside_shifted(lam, t, m):
    e = elem_sym_all(lam + t[..., None])[..., 1 : m + 1]
    return np.all(e > 0.0, axis=-1)


def cone_root_spectra(lam, m):
    """Largest real root ``t0`` of ``t -> P_m(lam + t 1)``, batched.

    ``{t : lam + t 1 in the cone}`` is the half line ``(t0, inf)``, so the
    root is found by bisection on the membership predicate.  This stays
    exact at roots of even multiplicity where ``P_m`` does not change sign.
    """
    lam = np.asarray(lam, dtype=float)
    d = lam.shape[-1]
    _check_order(d, m)
    flat = lam.reshape(-1, d)
    bound = 1.0 + np.abs(flat).max(axis=1)
    lo = -bound.copy()
    hi = bound.copy()
    limit = ROOT_BRACKET_LIMIT * np.maximum(np.abs(flat).max(axis=1), 1.0)
    while True:
        bad_hi = ~_inside_shifted(flat, hi, m)
        bad_lo = _inside_shifted(flat, lo, m)
        if not (bad_hi.any() or bad_lo.any()):
            break
        hi = np.where(bad_hi, 2.0 * hi, hi)
        lo = np.where(bad_lo, 2.0 * lo, lo)
        if np.any(np.abs(hi) > limit) or np.any(np.abs(lo) > limit):
            raise ArithmeticError("cone root bracket expansion failed")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        done = (mid <= lo) | (mid >= hi)
        if done.all():
            break
        inside = _inside_shifted(flat, mid, m)
        hi = np.where(inside & ~done, mid, hi)
        lo = np.where(~inside & ~done, mid, lo)
    out = lo.reshape(lam.shape[:-1])
    return float(out) if out.ndim == 0 else out


def cone_root(w, m):
    """Shift ``t0`` with ``w + t0 I`` on the cone boundary."""
    return cone_root_spectra(spectrum(w), m)


def in_cone(w, m):
    w = as_symmetric(w)
    _check_order(w.shape[-1], m)
    lam = spectrum(w)
    margin = spectral_margin(lam, m)
    return ConeVerdict(
        inside=bool(margin > INTERIOR_MARGIN),
        margin=float(margin),
        boundary_distance_t=float(cone_root_spectra(lam, m)),
    )


def admissible_spectra(lam, m, tol=0.0):
    lam = np.asarray(lam, dtype=float)
    return spectral_margin(lam + tol, m) >= CLOSURE_MARGIN


def admissible(w, m, tol=0.0):
    """Closure test: ``w + tol I`` lies in the closed cone up to round-off."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    w = as_symmetric(w)
    _check_order(w.shape[-1], m)
    return bool(admissible_spectra(spectrum(w), m, tol))


def submatrix_cone_check(w, m):
    """All principal (d-1)x(d-1) submatrices lie in ``C_{m-1, d-1}``."""
    w = as_symmetric(w)
    d = w.shape[-1]
    _check_order(d, m)
    if d == 2:
        # C_{1,1} is the positive half line
        return bool(np.all(np.diag(w) > 0.0))
    for k in range(d):
        keep = [i for i in range(d) if i != k]
        sub = w[np.ix_(keep, keep)]
        if not in_cone(sub, m - 1).inside:
            return False
    return True


def random_symmetric(rng, n, d):
    a = rng.uniform(-1.0, 1.0, size=(n, d, d))
    return 0.5 * (a + np.swapaxes(a, 1, 2))


def random_orthogonal(rng, n, d):
    z = rng.standard_normal((n, d, d))
    q, r = np.linalg.qr(z)
    signs = np.sign(np.diagonal(r, axis1=1, axis2=2))
    signs[signs == 0] = 1.0
    return q * signs[:, None, :]


def sample_cone_members(rng, n, d, m, eps_range=(1e-3, 2.0)):
    """Random members of ``C_m``: uniform symmetric matrices shifted past the cone root.

    The extra shift is log-uniform in ``eps_range`` so that samples reach
    both near the boundary and deep inside.
    """
    a = random_symmetric(rng, n, d)
    t0 = np.atleast_1d(cone_root_spectra(spectrum(a), m))
    lo, hi = np.log(eps_range[0]), np.log(eps_range[1])
    eps = np.exp(rng.uniform(lo, hi, size=n))
    return a + (t0 + eps)[:, None, None] * np.eye(d)
