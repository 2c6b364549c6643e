"""Uniform grids on ``[-1, 1]^d`` with cut-cell second differences.

Unknowns live at grid nodes strictly inside the domain.  A stencil arm that
leaves the domain is shortened to the exact boundary crossing of the
segment, where the zero boundary value is imposed, giving the three-point
nonuniform second difference

    D2 u = 2/(hp+hm) * ((u+ - u0)/hp - (u0 - u-)/hm),

which is monotone and exact on quadratics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class Disc:
    """Unit disc (ball) ``{psi > 0}`` with ``psi(x) = (1 - |x|^2) / 2``."""

    name = "disc"

    def psi(self, x):
        return 0.5 * (1.0 - np.sum(x * x, axis=-1))

    def distance(self, x):
        return 1.0 - np.sqrt(np.sum(x * x, axis=-1))

    def crossing(self, x, s):
        """Fraction ``theta`` in (0, 1] with ``|x + theta s| = 1``, for x inside."""
        a = np.sum(s * s, axis=-1)
        b = 2.0 * np.sum(x * s, axis=-1)
        c = np.sum(x * x, axis=-1) - 1.0
        root = np.sqrt(b * b - 4.0 * a * c)
        # stable positive root of a t^2 + b t + c with c < 0
        q = np.where(b >= 0.0, -0.5 * (b + root), 0.5 * (root - b))
        theta = np.where(b >= 0.0, c / q, q / a)
        return np.minimum(theta, 1.0)


class Square:
    """The open cube ``(-1, 1)^d``; ``psi = prod(1 - x_i^2) / 2``."""

    name = "square"

    def psi(self, x):
        return 0.5 * np.prod(1.0 - x * x, axis=-1)

    def distance(self, x):
        return np.min(1.0 - np.abs(x), axis=-1)

    def crossing(self, x, s):
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(s != 0.0, (np.sign(s) - x) / s, np.inf)
        return np.minimum(t.min(axis=-1), 1.0)


DOMAINS = {"disc": Disc, "square": Square}


@dataclass(frozen=True)
class Stencil:
    """Second difference along one lattice direction at every unknown.

    ``plus``/``minus`` index the neighbouring unknowns, or hold -1 where the
    arm was cut at the boundary.
    """

    direction: tuple
    plus: np.ndarray
    minus: np.ndarray
    c_plus: np.ndarray
    c_minus: np.ndarray
    h_plus: np.ndarray
    h_minus: np.ndarray

    @property
    def cut(self):
        return (self.plus < 0) | (self.minus < 0)


class Grid:
    def __init__(self, domain, d, h):
        if h <= 0:
            raise ValueError("grid spacing must be positive")
        cells = round(2.0 / h)
        if cells < 2 or abs(cells * h - 2.0) > 1e-9:
            raise ValueError(f"2/h must be an integer >= 2, got h = {h}")
        self.domain = domain
        self.d = d
        self.h = 2.0 / cells
        self.n = cells + 1
        self.axis = np.linspace(-1.0, 1.0, self.n)
        mesh = np.meshgrid(*([self.axis] * d), indexing="ij")
        self.box_coords = np.stack([m.ravel() for m in mesh], axis=-1)
        psi = domain.psi(self.box_coords)
        self.box_inside = psi > 0.0
        self.box_closure = psi >= 0.0
        self.interior = np.flatnonzero(self.box_inside)
        self.index_of = np.full(self.box_coords.shape[0], -1, dtype=np.int64)
        self.index_of[self.interior] = np.arange(self.interior.size)
        self.coords = self.box_coords[self.interior]
        self.multi = np.stack(np.unravel_index(self.interior, (self.n,) * d), axis=-1)
        self._stencils = {}

    @property
    def size(self):
        return self.interior.size

    def psi(self):
        return self.domain.psi(self.coords)

    def distance(self):
        return self.domain.distance(self.coords)

    def _arm(self, step):
        nb = self.multi + step
        in_box = np.all((nb >= 0) & (nb < self.n), axis=1)
        idx = np.full(self.size, -1, dtype=np.int64)
        flat = np.ravel_multi_index(nb[in_box].T, (self.n,) * self.d)
        idx[in_box] = self.index_of[flat]
        theta = np.ones(self.size)
        cut = idx < 0
        if np.any(cut):
            s = np.broadcast_to(self.h * step.astype(float), (int(cut.sum()), self.d))
            theta[cut] = self.domain.crossing(self.coords[cut], s)
        return idx, theta

    def stencil(self, direction):
        key = tuple(int(v) for v in direction)
        if key not in self._stencils:
            step = np.array(key, dtype=np.int64)
            length = self.h * float(np.linalg.norm(step))
            plus, tp = self._arm(step)
            minus, tm = self._arm(-step)
            hp = tp * length
            hm = tm * length
            self._stencils[key] = Stencil(
                direction=key,
                plus=plus,
                minus=minus,
                c_plus=2.0 / (hp * (hp + hm)),
                c_minus=2.0 / (hm * (hp + hm)),
                h_plus=hp,
                h_minus=hm,
            )
        return self._stencils[key]

    def second_difference(self, u, direction):
        st = self.stencil(direction)
        ext = np.append(u, 0.0)
        return st.c_plus * ext[st.plus] + st.c_minus * ext[st.minus] - (st.c_plus + st.c_minus) * u

    def first_difference(self, u, direction):
        """Second-order one-dimensional derivative along ``direction`` (unit speed)."""
        st = self.stencil(direction)
        ext = np.append(u, 0.0)
        hp, hm = st.h_plus, st.h_minus
        up = ext[st.plus] - u
        um = u - ext[st.minus]
        return (hm * hm * up + hp * hp * um) / (hp * hm * (hp + hm))

    def colors(self):
        """Parity colouring; no primitive lattice step joins two nodes of one colour."""
        return (self.multi % 2) @ (1 << np.arange(self.d))
