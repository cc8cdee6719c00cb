"""Explicit linear waves, their rescalings, and the distribution function m.

The probe wave is the radial solution

    u_lin(t, r) = (f(r - t) - f(r + t)) / r,    f(s) = max(1 - |s|, 0),

of the free wave equation on R^3, together with its time antiderivative
v_lin and the two-parameter family u_lin^{alpha,eps} obtained from the
scaling symmetry.  Everything here is a pure function of its arguments and
accepts numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .radial import RadialGrid, RadialState, energy_norm_sq, u_from_v

FOUR_PI_3 = 4.0 * np.pi / 3.0

__all__ = [
    "ScaleParams",
    "f_profile",
    "eval_u_lin",
    "eval_u_lin_scaled",
    "eval_u_lin_centered",
    "eval_v_lin",
    "eval_v_lin_scaled",
    "initial_data_u",
    "initial_data_v",
    "probe_state",
    "dual_probe_state",
    "energy_norm_sq",
    "m_slice",
    "m_closed",
    "m_region_integrals",
    "m_region_quadrature",
    "m_from_slices",
    "m_oracle",
    "plateau_measure",
    "OracleResult",
]


@dataclass(frozen=True)
class ScaleParams:
    """Amplitude alpha, smallness epsilon and spacetime center of a probe."""

    alpha: float
    epsilon: float
    t0: float = 0.0
    x0: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not (self.alpha > 0 and np.isfinite(self.alpha)):
            raise ValueError(f"alpha must be positive and finite, got {self.alpha}")
        if not (self.epsilon > 0 and np.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be positive and finite, got {self.epsilon}")
        x0 = tuple(float(c) for c in np.broadcast_to(np.asarray(self.x0, float), (3,)))
        object.__setattr__(self, "x0", x0)
        if not np.isfinite(self.sigma):
            raise ValueError("(alpha/epsilon)^2 overflows")

    @property
    def sigma(self) -> float:
        """Speed-scale factor (alpha/epsilon)^2."""
        return (self.alpha / self.epsilon) ** 2

    @property
    def x0_norm(self) -> float:
        return float(np.linalg.norm(self.x0))

    @property
    def tau0(self) -> float:
        return float(np.log(2.0 * self.alpha))

    @classmethod
    def from_tau0(cls, tau0: float, epsilon: float, t0=0.0, x0=(0.0, 0.0, 0.0)):
        return cls(alpha=0.5 * np.exp(tau0), epsilon=epsilon, t0=t0, x0=x0)


def f_profile(s):
    """The tent profile max(1 - |s|, 0)."""
    return np.maximum(1.0 - np.abs(s), 0.0)


def eval_u_lin(t, r):
    """Evaluate u_lin(t, r) without the 0/0 cancellation near r = 0.

    For t >= 0 the numerator f(r-t) - f(r+t) equals 2*min(r, t) when r + t < 1
    and max(1 - |r - t|, 0) otherwise; u_lin is odd in t.
    """
    t, r = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(r, dtype=float))
    sgn = np.sign(t)
    ta = np.abs(t)
    inner = r + ta < 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(
            inner,
            np.where(r < ta, 2.0, 2.0 * ta / r),
            np.maximum(1.0 - np.abs(r - ta), 0.0) / r,
        )
    at_origin = r == 0
    if np.any(at_origin):
        out = np.where(at_origin, np.where((ta > 0) & (ta < 1.0), 2.0, 0.0), out)
    out = sgn * out
    return out[()] if out.ndim == 0 else out


def eval_u_lin_scaled(p: ScaleParams, t, r):
    """alpha * u_lin(sigma t, sigma r) in coordinates already centered at (t0, x0)."""
    s = p.sigma
    return p.alpha * eval_u_lin(s * np.asarray(t, float), s * np.asarray(r, float))


def eval_u_lin_centered(p: ScaleParams, t, x):
    """u_lin^{alpha,eps}(t - t0, x - x0) for points x of shape (..., 3)."""
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x - np.asarray(p.x0), axis=-1)
    return eval_u_lin_scaled(p, np.asarray(t, float) - p.t0, r)


def _phi(s):
    # odd profile with -phi' = f on [-1, 1]
    s = np.asarray(s, dtype=float)
    return np.where(np.abs(s) <= 1.0, s * (np.abs(s) - 2.0) / 2.0, -np.sign(s) / 2.0)


def eval_v_lin(t, r):
    """v_lin(t, r) = (phi(r - t) + phi(r + t)) / r, the time antiderivative of u_lin.

    At r = 0 the limit 2*phi'(t) = 2(|t| - 1) 1_{|t| <= 1} is used.
    """
    t, r = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(r, dtype=float))
    ta = np.abs(t)
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = (_phi(r - ta) + _phi(r + ta)) / r
    # inside the backward cone r < |t|, r + |t| <= 1 the quotient is exactly 2(|t| - 1)
    out = np.where((r < ta) & (r + ta <= 1.0), 2.0 * (ta - 1.0), direct)
    out = np.where(r == 0, np.where(ta <= 1.0, 2.0 * (ta - 1.0), 0.0), out)
    return out[()] if out.ndim == 0 else out


def eval_v_lin_scaled(p: ScaleParams, t, r):
    """sigma^{-1} alpha v_lin(sigma t, sigma r)."""
    s = p.sigma
    return p.alpha / s * eval_v_lin(s * np.asarray(t, float), s * np.asarray(r, float))


def initial_data_u(r):
    """Initial data (u0, u1) = (0, 2/r 1_{r <= 1}) of u_lin."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("initial_data_u is defined for r > 0")
    u1 = np.where(r <= 1.0, 2.0 / r, 0.0)
    u0 = np.zeros_like(u1)
    if u1.ndim == 0:
        return float(u0), float(u1)
    return u0, u1


def initial_data_v(r):
    """Initial data (v0, v1) = (|x| - 2 on |x| <= 1, -1/|x| outside; 0) of v_lin."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("initial_data_v is defined for r > 0")
    v0 = np.where(r <= 1.0, r - 2.0, -1.0 / r)
    v1 = np.zeros_like(v0)
    if v0.ndim == 0:
        return float(v0), float(v1)
    return v0, v1


def probe_state(p: ScaleParams, grid: RadialGrid, t: float = 0.0) -> RadialState:
    """The probe u_lin^{alpha,eps} and its time derivative sampled at time t (centered).

    Breakpoints follow the left-piece convention: u1 at r = 1/sigma takes the
    interior value.
    """
    r = grid.r
    s = p.sigma
    if t == 0.0:
        v = np.zeros_like(r)
        vt = np.where(s * r <= 1.0, 2.0 * p.alpha, 0.0)
        return RadialState.from_v(grid, v, vt, time=t)
    u = eval_u_lin_scaled(p, t, r)
    # d/dt of alpha*u_lin(sigma t, sigma r): use the d'Alembert form for v = r u
    a = s * r
    ts = s * t
    dfd = np.where(np.abs(a - ts) < 1.0, np.sign(a - ts), 0.0)
    dfu = np.where(np.abs(a + ts) < 1.0, -np.sign(a + ts), 0.0)
    # v = alpha/s * (f(a - ts) - f(a + ts)); v_t = alpha * (-f'(a - ts) - f'(a + ts))
    vt = p.alpha * (dfd - dfu)
    return RadialState(grid, u, u_from_v(vt, r), time=t)


def dual_probe_state(p: ScaleParams, grid: RadialGrid) -> RadialState:
    """The dual data (v0^{alpha,eps}, 0) used to pair against scattering data."""
    r = grid.r
    v = eval_v_lin_scaled(p, 0.0, r)
    return RadialState(grid, v, np.zeros_like(r), time=0.0)


# --- distribution function -------------------------------------------------


def m_slice(t, lam):
    """Closed-form |{x : u_lin(t, x) > lam}| for t > 0, lam > 0.

    Regions are 0 < t <= 1/2, 1/2 < t <= 1 and t > 1 (left piece at the joins).
    """
    t, lam = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(lam, dtype=float))
    out = np.zeros(t.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = t <= 0.5
        thr = 2.0 * t / (1.0 - t)
        a = np.where(lam < thr, ((1 + t) / (1 + lam)) ** 3, (2 * t / lam) ** 3)
        out = np.where(r1 & (lam < 2.0) & (t > 0), a, out)

        r2 = (t > 0.5) & (t <= 1.0)
        b = np.where(lam < 1.0 / t, ((1 + t) / (1 + lam)) ** 3, ((1 - t) / (lam - 1)) ** 3)
        out = np.where(r2 & (lam < 2.0), b, out)

        r3 = t > 1.0
        c = ((t + 1) / (lam + 1)) ** 3 - ((t - 1) / (1 - lam)) ** 3
        out = np.where(r3 & (lam < 1.0 / t), c, out)
    out = FOUR_PI_3 * out
    return out[()] if out.ndim == 0 else out


def m_closed(lam):
    """m(lam) = (4 pi/3)(1/(2 lam^3) - 2/(lam+2)^3) on (0, 2), zero from 2 on."""
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0):
        raise ValueError("m_closed requires lam > 0")
    inside = lam < 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        val = FOUR_PI_3 * (0.5 / lam**3 - 2.0 / (lam + 2.0) ** 3)
    out = np.where(inside, val, 0.0)
    return out[()] if out.ndim == 0 else out


def m_region_integrals(lam: float) -> tuple[float, float, float]:
    """The three regional contributions to m(lam) in closed form.

    Regions are t in (0, 1/2), (1/2, 1) and (1, inf); the sum is m_closed(lam).
    """
    lam = float(lam)
    if not 0 < lam < 2:
        return 0.0, 0.0, 0.0
    i1 = FOUR_PI_3 * (81.0 / (64.0 * (lam + 1) ** 3) - 2.0 / (lam + 2) ** 3)
    if lam <= 1.0:
        i2 = FOUR_PI_3 * 175.0 / (64.0 * (lam + 1) ** 3)
    else:
        i2 = FOUR_PI_3 * (0.5 / lam**3 - 81.0 / (64.0 * (lam + 1) ** 3))
    i3 = FOUR_PI_3 * (0.5 / lam**3 - 4.0 / (lam + 1) ** 3) if lam < 1.0 else 0.0
    return i1, i2, i3


def m_region_quadrature(lam: float, epsabs: float = 1e-13) -> tuple[float, float, float]:
    """Adaptive quadrature of m_slice over each of the three time regions."""
    lam = float(lam)
    g = lambda t: float(m_slice(t, lam))  # noqa: E731
    kw = dict(epsabs=epsabs, epsrel=1e-12, limit=200)
    b1 = [lam / (lam + 2)] if 0 < lam / (lam + 2) < 0.5 else None
    i1 = integrate.quad(g, 0.0, 0.5, points=b1, **kw)[0]
    b2 = [1.0 / lam] if 0.5 < 1.0 / lam < 1.0 else None
    i2 = integrate.quad(g, 0.5, 1.0, points=b2, **kw)[0]
    i3 = integrate.quad(g, 1.0, 1.0 / lam, **kw)[0] if lam < 1.0 else 0.0
    return i1, i2, i3


def m_from_slices(lam: float) -> float:
    return float(sum(m_region_quadrature(lam)))


def plateau_measure() -> float:
    """Measure of {u_lin = 2}: int_0^1/2 (4pi/3) t^3 dt + int_1/2^1 (4pi/3)(1-t)^3 dt."""
    a = integrate.quad(lambda t: FOUR_PI_3 * t**3, 0.0, 0.5)[0]
    b = integrate.quad(lambda t: FOUR_PI_3 * (1 - t) ** 3, 0.5, 1.0)[0]
    return a + b


@dataclass(frozen=True)
class OracleResult:
    """Brute-force superlevel measure with a two-resolution error estimate."""

    value: float
    coarse_value: float
    n_t: int
    n_r: int

    @property
    def error_estimate(self) -> float:
        return abs(self.value - self.coarse_value)

    def resolved(self, rtol: float) -> bool:
        return self.error_estimate <= rtol * max(abs(self.value), 1e-300)


def _superlevel_slices(lam: float, n_t: int, n_r: int, chunk: int = 128, n_bisect: int = 48) -> float:
    t_max = 1.0 / lam + 1.0
    dt = t_max / n_t
    total = 0.0
    k = np.arange(n_r + 1) / n_r
    for start in range(0, n_t, chunk):
        t = (np.arange(start, min(start + chunk, n_t)) + 0.5) * dt
        # u_lin(t, .) vanishes off max(0, t - 1) <= r <= t + 1
        lo = np.maximum(t - 1.0, 0.0)
        width = t + 1.0 - lo
        r = lo[:, None] + width[:, None] * k[None, :]
        up = eval_u_lin(t[:, None], r) > lam
        a, b = r[:, :-1], r[:, 1:]
        full = up[:, :-1] & up[:, 1:]
        vol = np.sum(np.where(full, b**3 - a**3, 0.0))
        # cells where the indicator flips: locate the crossing by bisection
        ic, jc = np.nonzero(up[:, :-1] != up[:, 1:])
        tc = t[ic]
        left, right = a[ic, jc].copy(), b[ic, jc].copy()
        left_up = up[ic, jc]
        for _ in range(n_bisect):
            mid = 0.5 * (left + right)
            same = (eval_u_lin(tc, mid) > lam) == left_up
            left = np.where(same, mid, left)
            right = np.where(same, right, mid)
        x = 0.5 * (left + right)
        part = np.where(left_up, x**3 - a[ic, jc] ** 3, b[ic, jc] ** 3 - x**3)
        vol += float(np.sum(part))
        total += 4.0 * np.pi / 3.0 * vol * dt
    return total


def m_oracle(lam: float, n_t: int = 2000, n_r: int = 2000) -> OracleResult:
    """|{(t, x) : t > 0, u_lin(t, x) > lam}| by brute force on a (t, r) grid.

    Each time slice is scanned on n_r cells; cells where u_lin - lam changes
    sign have the crossing located by bisection on u_lin itself, so the slice
    volume is exact up to crossings missed inside a single cell.  Slices are
    combined with the midpoint rule in t.  The run is repeated at half
    resolution and the difference serves as the error estimate.
    """
    lam = float(lam)
    if lam <= 0:
        raise ValueError("m_oracle requires lam > 0")
    if lam >= 2.0:
        return OracleResult(0.0, 0.0, n_t, n_r)
    fine = _superlevel_slices(lam, n_t, n_r)
    coarse = _superlevel_slices(lam, n_t // 2, n_r // 2)
    return OracleResult(fine, coarse, n_t, n_r)
