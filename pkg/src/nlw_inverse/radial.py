"""Radial grids and states for spherically symmetric fields on R^3.

A radial field u(r) is stored together with v = r*u, the variable in which
the 3D radial wave equation becomes the 1D wave equation on the half line.
All quadratures here are exact for fields whose v is piecewise linear
between grid nodes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FOUR_PI = 4.0 * np.pi


class InvalidStateError(ValueError):
    """Raised when a radial state has non-finite or mis-shaped samples."""


@dataclass(frozen=True)
class RadialGrid:
    """Uniform node grid r_j = j*dr, j = 0..n_cells, on [0, r_max]."""

    r_max: float
    n_cells: int

    def __post_init__(self):
        if not (self.r_max > 0 and np.isfinite(self.r_max)):
            raise ValueError(f"r_max must be positive, got {self.r_max}")
        if self.n_cells < 2:
            raise ValueError(f"n_cells must be >= 2, got {self.n_cells}")

    @classmethod
    def from_spacing(cls, dr: float, r_max: float) -> "RadialGrid":
        n = int(round(r_max / dr))
        if abs(n * dr - r_max) > 1e-9 * max(1.0, r_max):
            r_max = n * dr
        return cls(r_max=n * dr, n_cells=n)

    @property
    def dr(self) -> float:
        return self.r_max / self.n_cells

    @property
    def n_nodes(self) -> int:
        return self.n_cells + 1

    @property
    def r(self) -> np.ndarray:
        return np.arange(self.n_nodes) * self.dr


def u_from_v(v: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Recover u = v/r, filling r = 0 with the even parabolic fit u = c0 + c2 r^2."""
    v = np.asarray(v, dtype=float)
    u = np.empty_like(v)
    u[..., 1:] = v[..., 1:] / r[1:]
    if v.shape[-1] >= 3:
        u[..., 0] = (4.0 * u[..., 1] - u[..., 2]) / 3.0
    else:
        u[..., 0] = u[..., 1]
    return u


@dataclass(frozen=True)
class RadialState:
    """Pair (u, u_t) sampled at the nodes of a radial grid at a given time."""

    grid: RadialGrid
    u: np.ndarray
    ut: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        ut = np.asarray(self.ut, dtype=float)
        n = self.grid.n_nodes
        if u.shape != (n,) or ut.shape != (n,):
            raise InvalidStateError(
                f"expected {n} samples, got u{u.shape} and ut{ut.shape}"
            )
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(ut))):
            raise InvalidStateError("state contains non-finite samples")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "ut", ut)

    @classmethod
    def from_v(cls, grid: RadialGrid, v, vt, time: float = 0.0) -> "RadialState":
        r = grid.r
        return cls(grid, u_from_v(v, r), u_from_v(vt, r), time)

    @classmethod
    def zeros(cls, grid: RadialGrid, time: float = 0.0) -> "RadialState":
        z = np.zeros(grid.n_nodes)
        return cls(grid, z, z.copy(), time)

    @property
    def v(self) -> np.ndarray:
        return self.grid.r * self.u

    @property
    def vt(self) -> np.ndarray:
        return self.grid.r * self.ut

    def support_radius(self) -> float:
        nz = np.nonzero((self.v != 0) | (self.vt != 0))[0]
        return 0.0 if nz.size == 0 else float(nz[-1] * self.grid.dr)

    def __neg__(self) -> "RadialState":
        return RadialState(self.grid, -self.u, -self.ut, self.time)

    def __sub__(self, other: "RadialState") -> "RadialState":
        _check_compatible(self, other)
        return RadialState(self.grid, self.u - other.u, self.ut - other.ut, self.time)

    def __add__(self, other: "RadialState") -> "RadialState":
        _check_compatible(self, other)
        return RadialState(self.grid, self.u + other.u, self.ut + other.ut, self.time)

    def scaled(self, c: float) -> "RadialState":
        return RadialState(self.grid, c * self.u, c * self.ut, self.time)


def _check_compatible(a: RadialState, b: RadialState):
    if a.grid != b.grid:
        raise ValueError("states live on different grids")


def _l2_pair(a: np.ndarray, b: np.ndarray, dr: float) -> float:
    # exact integral of the product of two piecewise-linear interpolants
    a0, a1, b0, b1 = a[:-1], a[1:], b[:-1], b[1:]
    return dr / 6.0 * float(np.sum(2 * a0 * b0 + a0 * b1 + a1 * b0 + 2 * a1 * b1))


def _h1_pair(a: np.ndarray, b: np.ndarray, dr: float) -> float:
    return float(np.sum(np.diff(a) * np.diff(b))) / dr


def energy_inner_v(va, vta, vb, vtb, dr: float) -> float:
    """energy_inner expressed directly on (v, v_t) node arrays."""
    return FOUR_PI * (_h1_pair(va, vb, dr) + _l2_pair(vta, vtb, dr))


def energy_inner(a: RadialState, b: RadialState) -> float:
    """Hdot^1 x L^2 inner product of two radial states.

    Computed in the v = r*u variables, where int |grad u|^2 dx = 4*pi int v_r^2 dr.
    Outside r_max the field is taken to be the harmonic extension v(r_max)/r,
    which is what makes the identity exact for data such as -1/|x|.
    """
    _check_compatible(a, b)
    dr = a.grid.dr
    return FOUR_PI * (_h1_pair(a.v, b.v, dr) + _l2_pair(a.vt, b.vt, dr))


def energy_norm_sq(state: RadialState) -> float:
    """Squared Hdot^1 x L^2 norm of a radial state."""
    if not (np.all(np.isfinite(state.u)) and np.all(np.isfinite(state.ut))):
        raise InvalidStateError("state contains non-finite samples")
    return energy_inner(state, state)
