"""Dirichlet problems ``P_m(D^2 u) = g^(m-1)`` in D, ``u = 0`` on the boundary."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .grid import DOMAINS, Grid

G_NAMES = ("constant", "radial-square", "tabulated")
MAX_NODES_3D = 33


class ConfigError(ValueError):
    """Invalid problem or run configuration; ``field`` names the offender."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


@dataclass(frozen=True)
class AssumptionReport:
    """Discrete check of ``|grad g|^2 <= K g`` and ``1 / sup g <= K``."""

    K: float
    K_needed: float
    gradient_ok: bool
    min_slack: float
    sup_ok: bool
    warnings: tuple = ()

    @property
    def passed(self):
        return self.gradient_ok and self.sup_ok


@dataclass(frozen=True, eq=False)
class GridProblem:
    """Geometry, order and right-hand side of one discrete Dirichlet problem.

    ``g`` and ``g_grad`` hold values at the unknowns; ``g_grad`` is analytic
    for the built-in right-hand sides and a difference gradient (NaN where
    undefined) for tabulated ones.  The boundary data is always zero.
    """

    d: int
    m: int
    domain: object
    h: float
    grid: Grid
    g: np.ndarray
    g_grad: np.ndarray
    g_name: str
    g_params: dict
    assumption: AssumptionReport

    @property
    def domain_name(self):
        return self.domain.name

    def shifted(self, eps):
        """The same problem with right-hand side ``g + eps``."""
        if eps < 0:
            raise ValueError("shift must be nonnegative")
        params = dict(self.g_params)
        params["shift"] = params.get("shift", 0.0) + eps
        g = self.g + eps
        assumption = check_assumption(self.grid, g, self.g_grad, self.assumption.K,
                                      exact=self.g_name != "tabulated")
        return replace(self, g=g, g_params=params, assumption=assumption)


def _tabulated_gradient(grid, g):
    """Central differences along the axes at nodes with both axis neighbours interior."""
    grad = np.zeros((grid.size, grid.d))
    ok = np.ones(grid.size, dtype=bool)
    ext = np.append(g, 0.0)
    for k in range(grid.d):
        e = np.zeros(grid.d, dtype=int)
        e[k] = 1
        st = grid.stencil(e)
        ok &= ~st.cut
        grad[:, k] = (ext[st.plus] - ext[st.minus]) / (2.0 * grid.h)
    grad[~ok] = np.nan
    return grad


def check_assumption(grid, g, grad, K=None, exact=True):
    """Validate ``|grad g|^2 <= K g`` nodewise.

    With ``exact`` the gradient is analytic and the inequality is checked
    as is; for difference gradients an O(h) allowance is granted.  ``K``
    defaults to the smallest admissible value.
    """
    notes = []
    sq = np.sum(grad * grad, axis=1)
    valid = np.isfinite(sq)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(g[valid] > 0, sq[valid] / g[valid], np.where(sq[valid] > 0, np.inf, 0.0))
    k_needed = float(ratio.max()) if ratio.size else 0.0
    if K is None:
        K = k_needed
    allowance = 0.0 if exact else grid.h
    slack = K * g[valid] + allowance - sq[valid]
    min_slack = float(slack.min()) if slack.size else 0.0
    gradient_ok = bool(min_slack >= 0.0)
    sup = float(g.max()) if g.size else 0.0
    sup_ok = sup > 0
    if not sup_ok:
        notes.append("g vanishes identically: 1/sup g <= K fails, the solution is u = 0")
    if not gradient_ok:
        notes.append(f"|grad g|^2 <= K g fails with K = {K:g} (needs K >= {k_needed:g})")
    return AssumptionReport(K=float(K), K_needed=k_needed, gradient_ok=gradient_ok, min_slack=min_slack,
                            sup_ok=sup_ok, warnings=tuple(notes))


def build_problem(domain="disc", d=2, m=2, h=1 / 32, g="constant", g_value=1.0, g_scale=1.0, K=None, g_table=None):
    """Validated :class:`GridProblem`.

    ``g`` is one of ``constant`` (``g_value``), ``radial-square``
    (``g_scale |x|^2``) or ``tabulated``, in which case ``g_table`` is an
    array of shape ``(N, d + 1)`` of coordinates and values covering every
    interior node.
    """
    if domain not in DOMAINS:
        raise ConfigError(f"unknown domain {domain!r}; expected one of {sorted(DOMAINS)}", "problem.domain")
    if d not in (2, 3):
        raise ConfigError(f"dimension must be 2 or 3, got {d}", "problem.d")
    if not 2 <= m <= d:
        raise ConfigError(f"order m must satisfy 2 <= m <= d = {d}, got {m}", "problem.m")
    if not h > 0:
        raise ConfigError(f"grid spacing must be positive, got {h}", "problem.h")
    if g not in G_NAMES:
        raise ConfigError(f"unknown g {g!r}; expected one of {G_NAMES}", "problem.g")
    try:
        grid = Grid(DOMAINS[domain](), d, h)
    except ValueError as exc:
        raise ConfigError(str(exc), "problem.h") from exc
    if d == 3 and grid.n > MAX_NODES_3D:
        raise ConfigError(f"3D grids are limited to {MAX_NODES_3D}^3 nodes (h >= 1/16)", "problem.h")

    x = grid.coords
    exact = True
    params = {}
    if g == "constant":
        if g_value < 0:
            raise ConfigError(f"g must be nonnegative, got constant {g_value}", "problem.g_value")
        values = np.full(grid.size, float(g_value))
        grad = np.zeros_like(x)
        params["value"] = float(g_value)
    elif g == "radial-square":
        if g_scale < 0:
            raise ConfigError(f"g must be nonnegative, got scale {g_scale}", "problem.g_scale")
        values = g_scale * np.sum(x * x, axis=1)
        grad = 2.0 * g_scale * x
        params["scale"] = float(g_scale)
    else:
        if g_table is None:
            raise ConfigError("tabulated g needs a table", "problem.g_file")
        values = _match_table(grid, np.asarray(g_table, dtype=float))
        if np.any(values < 0):
            raise ConfigError("tabulated g has negative values", "problem.g_file")
        grad = _tabulated_gradient(grid, values)
        exact = False

    if K is not None and K < 0:
        raise ConfigError("K must be nonnegative", "problem.K")
    assumption = check_assumption(grid, values, grad, K, exact=exact)
    for note in assumption.warnings:
        warnings.warn(note, stacklevel=2)
    return GridProblem(d=d, m=m, domain=grid.domain, h=grid.h, grid=grid, g=values, g_grad=grad, g_name=g,
                       g_params=params, assumption=assumption)


def _match_table(grid, table):
    if table.ndim != 2 or table.shape[1] != grid.d + 1:
        raise ConfigError(f"g table must have {grid.d + 1} columns", "problem.g_file")
    keys = np.rint((table[:, : grid.d] + 1.0) / grid.h).astype(np.int64)
    if np.any(np.abs(keys * grid.h - 1.0 - table[:, : grid.d]) > 1e-9):
        raise ConfigError("g table coordinates are not grid nodes", "problem.g_file")
    if np.any((keys < 0) | (keys >= grid.n)):
        raise ConfigError("g table coordinates lie outside [-1, 1]^d", "problem.g_file")
    flat = np.ravel_multi_index(keys.T, (grid.n,) * grid.d)
    lookup = np.full(grid.n**grid.d, math.nan)
    lookup[flat] = table[:, grid.d]
    values = lookup[grid.interior]
    if np.any(np.isnan(values)):
        raise ConfigError("g table does not cover every interior node", "problem.g_file")
    return values
