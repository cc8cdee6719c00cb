"""Forward solver for radial solutions of u_tt - Laplace(u) = F(t, x, u) on R^3.

With v = r*u the equation becomes v_tt - v_rr = r F(t, r, v/r) on r > 0 with
v(t, 0) = 0.  At unit CFL (dt = dr) the three-level scheme

    v[n+1, j] = v[n, j+1] + v[n, j-1] - v[n-1, j] + dt^2 * S[n, j]

is the exact discrete d'Alembert formula for the free part, so linear
propagation carries no dispersion error; the source enters with second-order
accuracy.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .nonlinearity import NonlinearitySpec, check_admissible  # noqa: F401  (re-export)
from .radial import (
    FOUR_PI,
    RadialGrid,
    RadialState,
    energy_inner_v,
    u_from_v,
)

__all__ = [
    "DomainEscapeError",
    "PicardDivergenceError",
    "TailNotConvergedError",
    "BlowupError",
    "Trajectory",
    "ScatteringResult",
    "PerturbationResult",
    "check_admissible",
    "propagate_linear",
    "solve_nlw",
    "discrete_energy",
    "strichartz_norm",
    "scattering_operator",
    "wave_operator",
    "cauchy_tail",
    "solve_perturbation",
    "free_evolve_levels",
    "grid_for_horizon",
]


class DomainEscapeError(RuntimeError):
    """The solution support would reach the outer boundary of the grid."""


class PicardDivergenceError(RuntimeError):
    """Picard distances grew for three consecutive iterations: data too large."""


class TailNotConvergedError(RuntimeError):
    """The Duhamel tail beyond the horizon exceeds the requested tolerance."""


class BlowupError(RuntimeError):
    """The discrete solution overflowed: data far outside the small-data regime."""


def _n_steps(T: float, dr: float) -> int:
    n = int(round(abs(T) / dr))
    if abs(n * dr - abs(T)) > 1e-9 * max(1.0, abs(T)):
        raise ValueError(f"horizon {T} is not a multiple of dr = {dr}")
    return n


def grid_for_horizon(support: float, T: float, dr: float, margin_cells: int = 2) -> RadialGrid:
    """Grid large enough that data supported in r <= support stays inside for time T."""
    n = int(np.ceil((support + abs(T)) / dr)) + margin_cells
    return RadialGrid(r_max=n * dr, n_cells=n)


def _vt_with_limit(vt: np.ndarray) -> np.ndarray:
    # v_t at r = 0 is stored as 0; cell integrals and characteristic slopes use
    # the one-sided limit, linearly extrapolated from the first two nodes
    out = vt.copy()
    out[0] = 2.0 * vt[1] - vt[2]
    return out


# --- linear propagation ----------------------------------------------------------


def propagate_linear(state: RadialState, t: float) -> RadialState:
    """Free evolution of `state` by time t through characteristic translation.

    v(t, r) = A(r + t) + B(r - t) with A, B = (v +- W)/2 and W the running
    integral of v_t; oddness of v gives B(-x) = -A(x).  When t is a multiple
    of dr the new samples are exact translations of node data.
    """
    grid = state.grid
    if t == 0:
        return state
    h = grid.dr
    r = grid.r
    if state.support_radius() + abs(t) > grid.r_max - h * (1 - 1e-9):
        raise DomainEscapeError(
            f"support {state.support_radius():.4g} + |t| = {abs(t):.4g} exceeds "
            f"r_max - dr = {grid.r_max - h:.4g}"
        )
    v = state.v
    vt = _vt_with_limit(state.vt)
    W = np.concatenate([[0.0], np.cumsum(0.5 * h * (vt[1:] + vt[:-1]))])
    A = 0.5 * (v + W)
    B = 0.5 * (v - W)
    vr = np.empty_like(v)
    vr[1:-1] = (v[2:] - v[:-2]) / (2 * h)
    vr[0] = v[1] / h
    vr[-1] = (v[-1] - v[-2]) / h
    Ad = 0.5 * (vr + vt)
    Bd = 0.5 * (vr - vt)

    def a_of(x, Aa, Bb, sgn):
        # A on the whole line: A(-y) = sgn * B(y); held constant past r_max
        xa = np.abs(x)
        pos = np.interp(xa, r, Aa)
        neg = sgn * np.interp(xa, r, Bb)
        return np.where(x >= 0, pos, neg)

    v_new = a_of(r + t, A, B, -1.0) + a_of(r - t, B, A, -1.0)
    vt_new = a_of(r + t, Ad, Bd, 1.0) - a_of(r - t, Bd, Ad, 1.0)
    v_new[0] = 0.0
    return RadialState.from_v(grid, v_new, vt_new, time=state.time + t)


def free_evolve_levels(v_a: np.ndarray, v_b: np.ndarray, n_steps: int):
    """Run the source-free three-level recursion n_steps beyond levels (v_a, v_b).

    Returns the last two levels (second to last, last).  Passing levels in
    reverse order runs time backwards.
    """
    prev, cur = v_a.copy(), v_b.copy()
    for _ in range(n_steps):
        nxt = np.empty_like(cur)
        nxt[1:-1] = cur[2:] + cur[:-2] - prev[1:-1]
        nxt[0] = 0.0
        nxt[-1] = 0.0
        prev, cur = cur, nxt
    if cur[-2] != 0.0 or prev[-2] != 0.0:
        raise DomainEscapeError("free evolution reached the outer boundary")
    return prev, cur


# --- trajectories -------------------------------------------------------------------


@dataclass(frozen=True)
class PicardLog:
    distances: tuple
    ratios: tuple
    iterations: int
    converged: bool


@dataclass(frozen=True)
class Trajectory:
    """Snapshots of (v, v_t) at times t_start + k * stride * dt."""

    grid: RadialGrid
    t_start: float
    dt: float
    stride: int
    v: np.ndarray
    vt: np.ndarray
    picard: PicardLog | None = None
    meta: dict = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return self.t_start + self.dt * self.stride * np.arange(self.v.shape[0])

    @property
    def u(self) -> np.ndarray:
        return u_from_v(self.v, self.grid.r)

    def state(self, k: int) -> RadialState:
        return RadialState.from_v(self.grid, self.v[k], self.vt[k], time=float(self.times[k]))

    @property
    def final(self) -> RadialState:
        return self.state(self.v.shape[0] - 1)

    def scaled(self, c: float) -> "Trajectory":
        return Trajectory(self.grid, self.t_start, self.dt, self.stride,
                          c * self.v, c * self.vt, None, dict(self.meta))

    def to_csv(self) -> str:
        """Header row with the r grid, then one row (t, u values) per snapshot."""
        buf = io.StringIO()
        buf.write("t," + ",".join(repr(float(x)) for x in self.grid.r) + "\n")
        for t, row in zip(self.times, self.u):
            buf.write(repr(float(t)) + "," + ",".join(repr(float(x)) for x in row) + "\n")
        return buf.getvalue()


def _source_fn(F: NonlinearitySpec | None, grid: RadialGrid):
    if F is None or F.is_zero:
        return None
    r = grid.r

    def src(t, v):
        return r * F(t, r, u_from_v(v, r))

    return src


def _first_level(v0, vt0, S0, h, sgn):
    # exact d'Alembert step for piecewise-linear data, half-weight source
    vtl = _vt_with_limit(vt0)
    v1 = np.zeros_like(v0)
    v1[1:-1] = (0.5 * (v0[2:] + v0[:-2])
                + sgn * 0.5 * h * (0.5 * vtl[:-2] + vtl[1:-1] + 0.5 * vtl[2:]))
    if S0 is not None:
        v1[1:-1] += 0.5 * h * h * S0[1:-1]
    return v1


def _leapfrog_levels(grid, v0, vt0, t0, dt, n_steps, src=None, src_levels=None):
    """All levels 0..n_steps+1 of the three-level scheme.

    The source is either a callable src(t, v) (explicit nonlinear scheme) or a
    prescribed array src_levels[n] (one Duhamel/Picard sweep).
    """
    h = grid.dr
    J = grid.n_nodes
    V = np.empty((n_steps + 2, J))

    def S(n, v):
        if src_levels is not None:
            return src_levels[n]
        if src is not None:
            return src(t0 + n * dt, v)
        return None

    V[0] = v0
    with np.errstate(over="ignore", invalid="ignore"):
        V[1] = _first_level(v0, vt0, S(0, v0), h, np.sign(dt))
        for n in range(1, n_steps + 1):
            cur, prev = V[n], V[n - 1]
            nxt = V[n + 1]
            nxt[1:-1] = cur[2:] + cur[:-2] - prev[1:-1]
            Sn = S(n, cur)
            if Sn is not None:
                nxt[1:-1] += h * h * Sn[1:-1]
            nxt[0] = 0.0
            nxt[-1] = 0.0
            if not np.isfinite(nxt).all():
                raise BlowupError(f"solution overflowed at t = {t0 + (n + 1) * dt:.4g}")
            if nxt[-2] != 0.0:
                raise DomainEscapeError(
                    f"solution reached the outer boundary r_max = {grid.r_max:.4g} "
                    f"at t = {t0 + (n + 1) * dt:.4g}"
                )
    return V


def _vt_levels(V, vt0, dt):
    vt = np.empty((V.shape[0] - 1, V.shape[1]))
    vt[0] = vt0
    vt[1:] = (V[2:] - V[:-2]) / (2.0 * dt)
    return vt


def _l10_sq(v, r, dr):
    # (int |u|^10 4 pi r^2 dr)^(1/2), trapezoid in r, for each row of v
    u = u_from_v(v, r)
    integrand = np.abs(u) ** 10 * r * r
    return np.sqrt(FOUR_PI * dr * (integrand.sum(axis=-1) - 0.5 * (integrand[..., 0] + integrand[..., -1])))


def _l5l10(v_levels, r, dr, dt_eff):
    inner = _l10_sq(v_levels, r, dr)
    if inner.size < 2:
        return 0.0
    total = abs(dt_eff) * (inner.sum() - 0.5 * (inner[0] + inner[-1]))
    return float(total) ** 0.2


def _picard_distance(Va, Vb, vt0, dt, grid):
    D = Va - Vb
    vtD = _vt_levels(D, np.zeros_like(vt0), dt)
    h = grid.dr
    e = max(np.sqrt(max(energy_inner_v(D[n], vtD[n], D[n], vtD[n], h), 0.0))
            for n in range(D.shape[0] - 1))
    return e + _l5l10(D[:-1], grid.r, h, dt)


def solve_nlw(
    data: RadialState,
    F: NonlinearitySpec | None,
    T: float,
    mode: str = "leapfrog",
    k_max: int = 50,
    tol: float = 1e-13,
    stride: int = 1,
) -> Trajectory:
    """Solve from `data` at data.time over a signed horizon T (multiple of dr).

    mode='leapfrog' steps the nonlinear scheme directly.  mode='picard'
    iterates u^(k+1) = free evolution + discrete Duhamel term of F(u^(k)),
    seeded with the free evolution, and records the distances d_k in the
    sup-energy + L^5_t L^10_x metric.
    """
    grid = data.grid
    h = grid.dr
    n = _n_steps(T, h)
    dt = h if T >= 0 else -h
    t0 = data.time
    v0, vt0 = data.v, data.vt
    src = _source_fn(F, grid)
    log = None
    if mode == "leapfrog" or src is None:
        V = _leapfrog_levels(grid, v0, vt0, t0, dt, n, src=src)
    elif mode == "picard":
        V = _leapfrog_levels(grid, v0, vt0, t0, dt, n)
        dists, ratios = [], []
        increases = 0
        converged = False
        scale = max(1.0, float(np.max(np.abs(V))))
        for k in range(k_max):
            with np.errstate(over="ignore", invalid="ignore"):
                S = np.stack([src(t0 + m * dt, V[m]) for m in range(n + 1)])
            try:
                V_new = _leapfrog_levels(grid, v0, vt0, t0, dt, n, src_levels=S)
            except BlowupError as exc:
                raise PicardDivergenceError(
                    f"Picard iterate overflowed at k = {k}; data too large for the contraction regime"
                ) from exc
            with np.errstate(over="ignore", invalid="ignore"):
                d = _picard_distance(V_new, V, vt0, dt, grid)
            if not np.isfinite(d):
                raise PicardDivergenceError(
                    f"Picard iterate overflowed at k = {k}; data too large for the contraction regime"
                )
            if dists:
                ratios.append(d / dists[-1] if dists[-1] > 0 else 0.0)
                increases = increases + 1 if d > dists[-1] else 0
            dists.append(d)
            V = V_new
            if increases >= 3:
                raise PicardDivergenceError(
                    f"Picard distances increased 3 times in a row (last {d:.3e}); "
                    "data too large for the contraction regime"
                )
            if d <= tol * scale:
                converged = True
                break
        log = PicardLog(tuple(dists), tuple(ratios), len(dists), converged)
    else:
        raise ValueError(f"mode must be 'leapfrog' or 'picard', got {mode!r}")
    vt = _vt_levels(V, vt0, dt)
    if stride < 1 or n % stride:
        raise ValueError(f"stride {stride} must divide the step count {n}")
    keep = np.arange(0, n + 1, stride)
    return Trajectory(grid, t0, dt, stride, V[keep], vt[keep], log)


def discrete_energy(traj: Trajectory) -> np.ndarray:
    """Conserved leapfrog energy between consecutive levels (needs stride 1).

    E = (4 pi / dt) [sum (v^{n+1} - v^n)^2 + sum (dx v^{n+1})(dx v^n)].
    """
    if traj.stride != 1:
        raise ValueError("discrete_energy needs a trajectory stored at every step")
    V = traj.v
    h = abs(traj.dt)
    dtv = np.diff(V, axis=0)
    dx = np.diff(V, axis=1)
    return FOUR_PI / h * ((dtv**2).sum(axis=1) + (dx[1:] * dx[:-1]).sum(axis=1))


def strichartz_norm(traj: Trajectory, t_range: tuple | None = None) -> float:
    """(int (int |u|^10 dx)^(1/2) dt)^(1/5) by trapezoid quadrature in r and t."""
    V = traj.v
    if t_range is not None:
        t = traj.times
        lo, hi = min(t_range), max(t_range)
        V = V[(t >= lo - 1e-12) & (t <= hi + 1e-12)]
    return _l5l10(V, traj.grid.r, traj.grid.dr, traj.dt * traj.stride)


# --- scattering --------------------------------------------------------------------


@dataclass(frozen=True)
class ScatteringResult:
    """Asymptotic state with its tail error bar and solver diagnostics."""

    state: RadialState
    tail_bound: float
    picard_ratios: tuple = ()
    trajectory: Trajectory | None = None


def _tail_from(traj: Trajectory, end: str) -> float:
    t = traj.times
    if end == "future":
        window = (t[-1] - np.sign(traj.dt), t[-1])
    else:
        window = (t[0], t[0] + np.sign(traj.dt))
    return strichartz_norm(traj, window) ** 5


def _asymptotic(F, data: RadialState, start: RadialState, span: float, pull: float, mode,
                k_max, tol, tail_tol, ends):
    # Duhamel difference form: data + U(-pull)[u(end) - u_free(end)], with the
    # free solution stepped by the same scheme so its discretization error cancels
    traj = solve_nlw(start, F, span, mode=mode, k_max=k_max, tol=tol)
    free = solve_nlw(start, None, span)
    diff = propagate_linear(traj.final - free.final, -pull)
    out = RadialState(data.grid, data.u + diff.u, data.ut + diff.ut, time=0.0)
    tail = sum(_tail_from(traj, e) for e in ends) if F is not None and not F.is_zero else 0.0
    if tail_tol is not None and tail > tail_tol:
        raise TailNotConvergedError(
            f"Duhamel tail bound {tail:.3e} exceeds {tail_tol:.3e}; increase the horizon"
        )
    ratios = traj.picard.ratios if traj.picard else ()
    return ScatteringResult(out, tail, ratios, traj)


def scattering_operator(
    F: NonlinearitySpec | None,
    data_minus: RadialState,
    T: float,
    mode: str = "leapfrog",
    k_max: int = 50,
    tol: float = 1e-13,
    tail_tol: float | None = None,
) -> ScatteringResult:
    """Map a past asymptotic state to the future one over the window [-T, T].

    The solution is started from the free evolution of data_minus at t = -T
    and evolved to +T; its difference from the free solution (same scheme) is
    pulled back by the free flow and added to data_minus.  The tail bound is the
    fifth power of the L^5 L^10 norm over the last unit of time at each end.
    """
    start = propagate_linear(data_minus, -T)
    return _asymptotic(F, data_minus, start, 2 * T, T, mode, k_max, tol, tail_tol, ("past", "future"))


def wave_operator(
    F: NonlinearitySpec | None,
    data_zero: RadialState,
    T: float,
    mode: str = "leapfrog",
    k_max: int = 50,
    tol: float = 1e-13,
    tail_tol: float | None = None,
) -> ScatteringResult:
    """Map data at t = 0 to the future asymptotic state over [0, T]."""
    return _asymptotic(F, data_zero, data_zero, T, T, mode, k_max, tol, tail_tol, ("future",))


def cauchy_tail(traj: Trajectory, times) -> np.ndarray:
    """Energy distances between consecutive free pull-backs U(-t) (u, u_t)(t)."""
    idx = [int(np.argmin(np.abs(traj.times - t))) for t in times]
    pulled = []
    for k in idx:
        s = traj.state(k)
        p = propagate_linear(s, -s.time)
        pulled.append(p)
    h = traj.grid.dr
    out = []
    for a, b in zip(pulled[:-1], pulled[1:]):
        dv, dvt = b.v - a.v, b.vt - a.vt
        out.append(np.sqrt(max(energy_inner_v(dv, dvt, dv, dvt, h), 0.0)))
    return np.asarray(out)


# --- perturbation around an explicit free background --------------------------------


@dataclass(frozen=True)
class PerturbationResult:
    """Levels of delta = r (u - u_b) at s_end and one step beyond.

    The pair (v_end, v_next) evolves freely afterwards; the final source was
    applied with half weight, matching the half-weight start, so the Duhamel
    integral is the trapezoid rule in time.
    """

    grid: RadialGrid
    s_start: float
    s_end: float
    v_end: np.ndarray
    v_next: np.ndarray
    max_source: float


def solve_perturbation(
    grid: RadialGrid,
    background,
    F: NonlinearitySpec,
    s_start: float,
    s_end: float,
    feedback: bool = True,
) -> PerturbationResult:
    """Solve for delta with u = u_b + delta/r, where u_b = background(s, r) is free.

    delta_tt - delta_rr = r F(s, r, u_b + delta/r), delta = 0 at s_start.  With
    feedback=False the source is r F(s, r, u_b) (the first Born iterate).
    """
    h = grid.dr
    r = grid.r
    n = _n_steps(s_end - s_start, h)
    dt = h if s_end >= s_start else -h

    def S(m, d):
        s = s_start + m * dt
        ub = background(s, r)
        u = ub + u_from_v(d, r) if feedback else ub
        return r * F(s, r, u)

    prev = np.zeros(grid.n_nodes)
    S0 = S(0, prev)
    cur = np.zeros_like(prev)
    cur[1:-1] = 0.5 * h * h * S0[1:-1]
    smax = float(np.max(np.abs(S0)))
    with np.errstate(over="ignore", invalid="ignore"):
        for m in range(1, n + 1):
            Sm = S(m, cur)
            smax = max(smax, float(np.max(np.abs(Sm))))
            w = 0.5 if m == n else 1.0
            nxt = np.zeros_like(cur)
            nxt[1:-1] = cur[2:] + cur[:-2] - prev[1:-1] + w * h * h * Sm[1:-1]
            if not np.isfinite(nxt).all():
                raise BlowupError(f"perturbation overflowed at s = {s_start + (m + 1) * dt:.4g}")
            if nxt[-2] != 0.0:
                raise DomainEscapeError(
                    f"perturbation reached r_max = {grid.r_max:.4g} at s = {s_start + (m + 1) * dt:.4g}"
                )
            prev, cur = cur, nxt
    return PerturbationResult(grid, s_start, s_end, prev, cur, smax)
