"""Diagnostics of a discrete solution.

* barrier ratio ``max |u| / psi``;
* largest discrete gradient;
* largest discrete Hessian norm at interior nodes and at boundary-layer
  nodes (those whose Hessian stencil is cut by the boundary), with the
  ratio ``N = interior / (1 + boundary)``;
* inward boundary difference quotients ``u(x) / dist(x)`` over nodes at
  distance ``[h/2, 3h/2]`` from the boundary;
* subharmonic slack ``Delta_h u - d kappa(I) g^(1-1/m)``;
* nodewise admissibility of the discrete Hessian.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from ..bellman import build_control_net, mth_root
from ..cone import admissible_spectra, spectral_margin
from ..symfun import spectrum

AUDIT_TOL = 1e-6


def _axis(d, i):
    e = np.zeros(d, dtype=int)
    e[i] = 1
    return e


def hessian_directions(d):
    out = [_axis(d, i) for i in range(d)]
    for i in range(d):
        for j in range(i + 1, d):
            out += [_axis(d, i) + _axis(d, j), _axis(d, i) - _axis(d, j)]
    return out


def discrete_hessian(u, grid):
    """Hessian at every unknown; cross terms ``(D2_{e_i+e_j} - D2_{e_i-e_j}) / 2``.

    Returns the ``(N, d, d)`` stack and a mask of nodes whose stencil is cut.
    """
    d = grid.d
    u = np.asarray(u, dtype=float)
    hess = np.zeros((grid.size, d, d))
    cut = np.zeros(grid.size, dtype=bool)
    for i in range(d):
        e = _axis(d, i)
        hess[:, i, i] = grid.second_difference(u, e)
        cut |= grid.stencil(e).cut
        for j in range(i + 1, d):
            ep = e + _axis(d, j)
            em = e - _axis(d, j)
            cross = 0.5 * (grid.second_difference(u, ep) - grid.second_difference(u, em))
            hess[:, i, j] = hess[:, j, i] = cross
            cut |= grid.stencil(ep).cut | grid.stencil(em).cut
    return hess, cut


def discrete_gradient(u, grid):
    return np.stack([grid.first_difference(u, _axis(grid.d, i)) for i in range(grid.d)], axis=-1)


@dataclass(frozen=True)
class AuditReport:
    nodes: int
    admissible: int
    fraction: float
    worst_margin: float
    tol: float

    @property
    def passed(self):
        return self.admissible == self.nodes


def admissibility_audit(u, problem, tol=AUDIT_TOL):
    """Share of interior nodes whose discrete Hessian lies in the closed cone.

    A node passes when ``D2u + tol * scale * I`` is admissible, ``scale``
    being the largest Hessian norm over the grid (at least 1).
    """
    hess, _ = discrete_hessian(u, problem.grid)
    lam = spectrum(hess)
    scale = max(1.0, float(np.max(np.abs(lam), initial=0.0)))
    ok = admissible_spectra(lam, problem.m, tol * scale)
    margins = spectral_margin(lam, problem.m)
    n = int(ok.size)
    return AuditReport(
        nodes=n,
        admissible=int(ok.sum()),
        fraction=float(ok.mean()) if n else 1.0,
        worst_margin=float(np.min(margins)) if n else 0.0,
        tol=tol * scale,
    )


@dataclass(frozen=True)
class Monitors:
    barrier_ratio: float
    max_gradient: float
    interior_D2_max: float
    boundary_D2_max: float
    d2_ratio: float
    min_boundary_normal_derivative: float
    max_boundary_normal_derivative: float
    subharmonic_slack: float
    admissible_fraction: float
    admissibility_margin: float

    @property
    def hopf_gamma(self):
        return -self.max_boundary_normal_derivative

    def as_dict(self):
        return asdict(self)


def boundary_quotients(u, grid):
    dist = grid.distance()
    band = (dist >= 0.5 * grid.h) & (dist <= 1.5 * grid.h)
    return u[band] / dist[band]


def compute_monitors(report, scheme=None):
    problem = report.problem
    grid = problem.grid
    u = report.u
    psi = grid.psi()
    barrier = float(np.max(np.abs(u) / psi, initial=0.0))
    grad = discrete_gradient(u, grid)
    max_grad = float(np.max(np.linalg.norm(grad, axis=1), initial=0.0))
    hess, cut = discrete_hessian(u, grid)
    norms = np.max(np.abs(spectrum(hess)), axis=1)
    interior = float(np.max(norms[~cut], initial=0.0))
    boundary = float(np.max(norms[cut], initial=0.0))
    quot = boundary_quotients(u, grid)
    iso = build_control_net(problem.d, problem.m, 1, 1).controls[0]
    gpow = mth_root(problem.g ** (problem.m - 1), problem.m)
    lap = np.trace(hess, axis1=1, axis2=2)
    slack = lap - problem.d * iso.kappa * gpow
    audit = admissibility_audit(u, problem)
    return Monitors(
        barrier_ratio=barrier,
        max_gradient=max_grad,
        interior_D2_max=interior,
        boundary_D2_max=boundary,
        d2_ratio=interior / (1.0 + boundary),
        min_boundary_normal_derivative=float(quot.min()) if quot.size else math.nan,
        max_boundary_normal_derivative=float(quot.max()) if quot.size else math.nan,
        subharmonic_slack=float(slack.min()) if slack.size else 0.0,
        admissible_fraction=audit.fraction,
        admissibility_margin=audit.worst_margin,
    )
