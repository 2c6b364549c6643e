"""Monotone discretization of ``inf_w [Tr(a(w) D^2 u) - kappa(w) g^(1-1/m)] = 0``.

Every lattice-aligned control has ``a = sum_k mu_k e_k e_k^T`` with lattice
directions ``e_k``, so its operator is ``sum_k mu_k D2_{e_k} u`` with
nonnegative weights: a negative diagonal and nonnegative off-diagonal
entries, whatever the grid.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..bellman import mth_root


def _canonical(v):
    """Representative of ``{v, -v}``: first nonzero entry positive."""
    v = tuple(int(x) for x in v)
    first = next(x for x in v if x != 0)
    return v if first > 0 else tuple(-x for x in v)


class BellmanScheme:
    """Stencil tables for one problem and one lattice-aligned net."""

    def __init__(self, problem, net):
        if net.d != problem.d or net.m != problem.m:
            raise ValueError(f"net is for (d, m) = ({net.d}, {net.m}), problem is ({problem.d}, {problem.m})")
        if not net.lattice_aligned:
            raise ValueError("every control must carry a lattice frame")
        self.problem = problem
        self.net = net
        grid = problem.grid
        directions = []
        index = {}
        rows = []
        for ctl in net.controls:
            row = {}
            for e, mu in zip(ctl.directions, ctl.weights):
                key = _canonical(e)
                if key not in index:
                    index[key] = len(directions)
                    directions.append(key)
                row[index[key]] = row.get(index[key], 0.0) + float(mu)
            rows.append(row)
        weights = np.zeros((len(net), len(directions)))
        for c, row in enumerate(rows):
            for j, mu in row.items():
                weights[c, j] = mu
        self.directions = directions
        self.weights = weights
        stencils = [grid.stencil(e) for e in directions]
        self.plus = np.stack([s.plus for s in stencils])
        self.minus = np.stack([s.minus for s in stencils])
        self.c_plus = np.stack([s.c_plus for s in stencils])
        self.c_minus = np.stack([s.c_minus for s in stencils])
        self.size = grid.size
        self.set_g(problem.g)

    def set_g(self, g):
        self.gpow = mth_root(np.asarray(g, dtype=float) ** (self.problem.m - 1), self.problem.m)
        self.free = -self.net.kappas[:, None] * self.gpow[None, :]

    def second_differences(self, u):
        """``D2_e u`` for every scheme direction; shape ``(directions, N)``."""
        ext = np.append(u, 0.0)
        return self.c_plus * ext[self.plus] + self.c_minus * ext[self.minus] - (self.c_plus + self.c_minus) * u

    def control_values(self, u):
        """``L^w u + f(w)`` for every control and node; shape ``(controls, N)``."""
        return self.weights @ self.second_differences(u) + self.free

    def bellman(self, u):
        """Pointwise minimum over controls and the lowest minimizing index."""
        vals = self.control_values(u)
        policy = np.argmin(vals, axis=0)
        return vals[policy, np.arange(self.size)], policy

    def diagonal(self, policy):
        """``-diag L^policy``, the positive diagonal of ``A = -L``."""
        return np.einsum("nj,jn->n", self.weights[policy], self.c_plus + self.c_minus)

    def matrix(self, policy):
        """``A = -L^policy`` in CSR form; an M-matrix."""
        n = self.size
        mu = self.weights[policy].T  # (directions, N)
        nodes = np.arange(n)
        rows = [nodes]
        cols = [nodes]
        vals = [np.sum(mu * (self.c_plus + self.c_minus), axis=0)]
        for nb, coef in ((self.plus, self.c_plus), (self.minus, self.c_minus)):
            keep = (nb >= 0) & (mu > 0)
            j, i = np.nonzero(keep)
            rows.append(i)
            cols.append(nb[j, i])
            vals.append(-(mu * coef)[j, i])
        a = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
        return a.tocsr()

    def rhs(self, policy):
        """``f`` of the policy, so that ``A u = f`` is ``L u + f = 0``."""
        return self.free[policy, np.arange(self.size)]
