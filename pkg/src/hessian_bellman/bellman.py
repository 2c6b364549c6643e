"""Bellman form of ``P_m(v) = c``: controls, control nets and residuals.

For a cone member ``w`` the control carries

* ``a(w) = K(w) / Tr K(w)``, positive definite with unit trace, and
* ``kappa(w) = m (d-m+1)^-1 P_m(w)^(1-1/m) / P_{m-1}(w)``,

and ``P_m(v) = c`` for ``v`` in the closed cone is equivalent to
``inf_w [Tr(a(w) v) - kappa(w) c^(1/m)] = 0``.  Both ``a`` and ``kappa``
are invariant under ``w -> s w``, so every control is stored on the slice
``Tr w = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .cone import ConeDomainError, cone_root_spectra, in_cone, in_cone_spectra, spectral_margin
from .symfun import _check_order, as_symmetric, elem_sym, elem_sym_all, elem_sym_deleted, k_matrix, pm_matrix

PROFILE_MARGIN = 1e-3


def mth_root(c, m):
    """``c^(1/m)`` via ``exp(log(c)/m)``, exactly 0 at ``c = 0``."""
    c = np.asarray(c, dtype=float)
    if np.any(c < 0):
        raise ValueError("c must be nonnegative")
    safe = np.where(c > 0.0, c, 1.0)
    out = np.where(c > 0.0, np.exp(np.log(safe) / m), 0.0)
    return float(out) if out.ndim == 0 else out


def _require_cone(w, m):
    verdict = in_cone(w, m)
    if not verdict.inside:
        raise ConeDomainError(f"matrix is not in C_{m} (margin {verdict.margin:.3e})")


def normalized_coeff(w, m):
    """``a(w) = K(w) / Tr K(w)``."""
    w = as_symmetric(w)
    _require_cone(w, m)
    k = k_matrix(w, m)
    return k / np.trace(k)


def kappa(w, m):
    w = as_symmetric(w)
    _require_cone(w, m)
    d = w.shape[-1]
    pm = pm_matrix(w, m)
    pm1 = pm_matrix(w, m - 1)
    return m / (d - m + 1) * pm ** (1.0 - 1.0 / m) / pm1


def free_term(w, m, g_val):
    """``f(w, x) = -kappa(w) g(x)^(1-1/m)`` at a single value of ``g``."""
    if g_val < 0:
        raise ValueError(f"g must be nonnegative, got {g_val}")
    k = kappa(w, m)
    if g_val == 0:
        return 0.0
    return -k * math.exp((1.0 - 1.0 / m) * math.log(g_val))


@dataclass(frozen=True, eq=False)
class Control:
    """One element of a control net.

    ``directions`` (integer lattice vectors, one row per eigen-direction of
    ``w``) and ``weights`` (the eigenvalues of ``a`` along those directions)
    are set for lattice-aligned controls only; the grid solver needs them.
    """

    w: np.ndarray
    a: np.ndarray
    kappa: float
    frame_id: int | None = None
    directions: np.ndarray | None = None
    weights: np.ndarray | None = None


def control_from_profile(rho, m, directions=None, frame_id=None):
    """Control ``w = Q diag(rho) Q^T`` with ``Q`` the normalized ``directions``."""
    rho = np.asarray(rho, dtype=float)
    d = rho.shape[0]
    _check_order(d, m)
    rho = rho / rho.sum()
    if not in_cone_spectra(rho, m):
        raise ConeDomainError(f"profile {rho} is not in C_{m}")
    if directions is None:
        directions = np.eye(d, dtype=int)
    directions = np.asarray(directions)
    q = (directions / np.linalg.norm(directions, axis=1, keepdims=True)).T
    grad = elem_sym_deleted(rho, m - 1)
    weights = grad / grad.sum()
    w = (q * rho) @ q.T
    a = (q * weights) @ q.T
    pm = elem_sym(rho, m)
    pm1 = elem_sym(rho, m - 1)
    kap = m / (d - m + 1) * pm ** (1.0 - 1.0 / m) / pm1
    return Control(w=w, a=a, kappa=float(kap), frame_id=frame_id, directions=directions, weights=weights)


def make_control(w, m):
    """Control for an arbitrary cone member (no lattice frame)."""
    w = as_symmetric(w)
    _require_cone(w, m)
    w = w / np.trace(w)
    k = k_matrix(w, m)
    d = w.shape[-1]
    pm = pm_matrix(w, m)
    pm1 = pm_matrix(w, m - 1)
    kap = m / (d - m + 1) * pm ** (1.0 - 1.0 / m) / pm1
    return Control(w=w, a=k / np.trace(k), kappa=float(kap))


def _primitive(v):
    g = reduce(math.gcd, (abs(int(x)) for x in v))
    return tuple(int(x) // g for x in v)


def lattice_frames(d, count):
    """The first ``count`` orthogonal lattice frames, coarsest stencils first.

    Each frame is an integer matrix whose rows are mutually orthogonal
    lattice vectors.  Frame 0 is always the coordinate frame.
    """
    if count < 1:
        raise ValueError("frame count must be at least 1")
    if d == 2:
        frames = []
        size = 1
        while len(frames) < count:
            cands = [
                (p, q)
                for p in range(size + 1)
                for q in range(size + 1)
                if max(p, q) == size and p > 0 and math.gcd(p, q) == 1
            ]
            cands.sort(key=lambda v: math.atan2(v[1], v[0]))
            for p, q in cands:
                frames.append(np.array([[p, q], [-q, p]]))
            size += 1
        return frames[:count]
    if d == 3:
        frames = [np.eye(3, dtype=int)]
        for k in range(3):
            i, j = [x for x in range(3) if x != k]
            u = np.zeros(3, dtype=int)
            v = np.zeros(3, dtype=int)
            u[i], u[j] = 1, 1
            v[i], v[j] = 1, -1
            frames.append(np.array([u, v, np.eye(3, dtype=int)[k]]))
        faces = [row for fr in frames[1:4] for row in fr[:2]]
        for b in [(1, 1, 1), (1, 1, -1), (1, -1, 1), (-1, 1, 1)]:
            b = np.array(b)
            u = next(f for f in faces if f @ b == 0)
            frames.append(np.array([b, u, _primitive(np.cross(b, u))]))
        for k in range(3):
            i, j = [x for x in range(3) if x != k]
            for p, q in [(2, 1), (1, 2)]:
                u = np.zeros(3, dtype=int)
                v = np.zeros(3, dtype=int)
                u[i], u[j] = p, q
                v[i], v[j] = -q, p
                frames.append(np.array([u, v, np.eye(3, dtype=int)[k]]))
        if count > len(frames):
            raise ValueError(f"at most {len(frames)} lattice frames are available in 3D")
        return frames[:count]
    if count > 1:
        raise ValueError("only the coordinate frame is available for d > 3")
    return [np.eye(d, dtype=int)]


def _boundary_profile(z, m, margin):
    """Trace-one profile ``z + s 1`` (normalized) whose cone margin is ``margin``."""
    z = np.asarray(z, dtype=float)
    t0 = cone_root_spectra(z, m)
    lo, hi = 0.0, 1.0
    while spectral_margin(z + t0 + hi, m) < margin:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if spectral_margin(z + t0 + mid, m) < margin:
            lo = mid
        else:
            hi = mid
    rho = z + t0 + hi
    return rho / rho.sum()


def eigen_profiles(d, m, count, seed=0, margin=PROFILE_MARGIN):
    """Anisotropic trace-one eigenvalue profiles in ``C_m``.

    A count of 1 means the isotropic profile alone, so no anisotropic
    profile is returned.  In 2D the profiles ``(t, 1-t)`` are equispaced
    between the two near-boundary anchors of cone margin ``margin``.  In
    higher dimensions two near-boundary anchors are followed by rejection
    samples under ``seed``.
    """
    if count < 1:
        raise ValueError("profile count must be at least 1")
    if count == 1:
        return []
    if d == 2:
        lo = _boundary_profile([1.0, 0.0], m, margin)[1]
        return [np.array([t, 1.0 - t]) for t in np.linspace(lo, 1.0 - lo, count)]
    anchors = [_boundary_profile(np.eye(d)[0], m, margin), _boundary_profile(-np.eye(d)[-1], m, margin)]
    profiles = anchors[:count]
    rng = np.random.default_rng(seed)
    while len(profiles) < count:
        lam = rng.uniform(-1.0, 1.0, size=d)
        lam = lam + cone_root_spectra(lam, m) + np.exp(rng.uniform(np.log(1e-2), np.log(1.0)))
        rho = lam / lam.sum()
        if spectral_margin(rho, m) >= margin:
            profiles.append(rho)
    return profiles


@dataclass(eq=False)
class ControlNet:
    """Finite set of controls standing in for the infimum over ``C_m``.

    Treated as immutable; :meth:`with_control` returns an enlarged copy.
    """

    controls: tuple
    d: int
    m: int
    frames: int = 0
    profiles: int = 0
    a_stack: np.ndarray = field(init=False, repr=False)
    kappas: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.controls:
            raise ValueError("control net is empty")
        self.controls = tuple(self.controls)
        self.a_stack = np.stack([c.a for c in self.controls])
        self.kappas = np.array([c.kappa for c in self.controls])

    def __len__(self):
        return len(self.controls)

    def with_control(self, control):
        return ControlNet(self.controls + (control,), self.d, self.m, self.frames, self.profiles)

    @property
    def lattice_aligned(self):
        return all(c.directions is not None for c in self.controls)


def build_control_net(d, m, frames, profiles, seed=0):
    """Isotropic control followed by every (frame, profile) combination."""
    _check_order(d, m)
    if m < 2:
        raise ValueError("order m must be at least 2")
    if frames < 1 or profiles < 1:
        raise ValueError("frames and profiles must be positive")
    frame_list = lattice_frames(d, frames)
    controls = [control_from_profile(np.full(d, 1.0 / d), m, frame_list[0], frame_id=0)]
    for rho in eigen_profiles(d, m, profiles, seed):
        for fid, frame in enumerate(frame_list):
            controls.append(control_from_profile(rho, m, frame, frame_id=fid))
    return ControlNet(tuple(controls), d, m, frames, profiles)


def control_values(v, c, net):
    """``Tr(a(w) v) - kappa(w) c^(1/m)`` for every control; shape ``(..., len(net))``."""
    v = np.asarray(v, dtype=float)
    root = mth_root(c, net.m)
    tr = np.einsum("kij,...ij->...k", net.a_stack, v)
    return tr - net.kappas * np.asarray(root)[..., None]


def bellman_residual(v, c, net):
    """Minimum over the net of ``Tr(a(w) v) - kappa(w) c^(1/m)``.

    Nonnegative whenever ``v`` is in the closed cone and ``P_m(v) = c``,
    zero when the net contains the control aligned with ``v``.
    """
    if len(net) == 0:
        raise ValueError("control net is empty")
    v = as_symmetric(v)
    if c < 0:
        raise ValueError("c must be nonnegative")
    return float(control_values(v, c, net).min())


def concave_envelope_check(v, m, net):
    """Minimum over the net of the tangent bound ``m^-1 P_m(w)^(1/m-1) Tr(K(w) v)``.

    Concavity of ``P_m^(1/m)`` makes every term at least ``P_m(v)^(1/m)``.
    """
    v = as_symmetric(v)
    _require_cone(v, m)
    best = math.inf
    for ctl in net.controls:
        k = k_matrix(ctl.w, m)
        val = np.sum(k * v) * pm_matrix(ctl.w, m) ** (1.0 / m - 1.0) / m
        best = min(best, float(val))
    return best


def log_concavity_slack(lam, m):
    """``min_k q_k^2 - q_{k-1} q_{k+1}`` for ``q_k = P_k / C(d, k)``, ``1 <= k < m``.

    Scaled by ``max(q_k^2, tiny)`` so the slack is relative.
    """
    lam = np.asarray(lam, dtype=float)
    d = lam.shape[-1]
    e = elem_sym_all(lam)
    q = e / np.array([math.comb(d, k) for k in range(d + 1)])
    slacks = []
    for k in range(1, m):
        s = q[..., k] ** 2 - q[..., k - 1] * q[..., k + 1]
        slacks.append(s / np.maximum(q[..., k] ** 2, 1e-300))
    if not slacks:
        return np.zeros(lam.shape[:-1])
    return np.min(np.stack(slacks), axis=0)
