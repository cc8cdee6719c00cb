"""From scattering measurements to the nonlinearity.

A probe of amplitude alpha and smallness eps centered at (t0, x0) yields the
normalized Born value

    hw(alpha) = (H * w)(log 2 alpha),

either from the Born functional evaluated by quadrature (``born_oracle``) or
from the pairing of S_F(data) - data against the dual probe computed with
the PDE solver (``full_pde``).  A sweep over tau0 = log 2 alpha followed by
deconvolution and the H -> F change of variables recovers F(t0, x0, .).

Quadratures are carried out in probe coordinates s = sigma (t - t0),
y = sigma (x - x0), sigma = (alpha/eps)^2, where the probe is the fixed wave
alpha * u_lin.  With I = int int F(alpha u_lin) alpha u_lin ds dy there,
born_functional = sigma^-4 I and hw = 3 I / (32 pi alpha^6).
"""

from __future__ import annotations

import json
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy import integrate

from .closed_forms import ScaleParams, eval_u_lin, m_closed
from .nonlinearity import NonlinearitySpec
from .radial import FOUR_PI, RadialGrid
from .wave_engine import BlowupError, free_evolve_levels, solve_perturbation
from .weight_deconv import (
    W_SUPPORT,
    DeconvConfig,
    F_from_H,
    SampledFunction,
    _jsonable,
    convolve,
    deconvolve,
    eval_w,
    w_cell_weights,
)

MODES = ("born_oracle", "full_pde")


class BornRegimeWarning(UserWarning):
    """The eps-scaling self-test suggests eps is outside the Born regime."""


@lru_cache(maxsize=None)
def _gl(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _hw_factor(alpha: float) -> float:
    return 3.0 / (32.0 * np.pi * alpha**6)


# --- Born functional by direct quadrature ------------------------------------------


def _rho_forms(F: NonlinearitySpec, sigma: float, d: float):
    # breakpoints in rho as linear forms c0 + c1 * s
    forms = [(0.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (1.0, 1.0)]
    forms += [(sigma * b, 0.0) for b in F.mask_breaks(d)]
    return forms


def _s_breaks(F: NonlinearitySpec, sigma: float, d: float, s_min: float) -> list[float]:
    pts = {0.0, 0.5, 1.0, s_min}
    for b in F.mask_breaks(d):
        c = sigma * b
        pts |= {c, c - 1.0, c + 1.0, 1.0 - c}
    pts = sorted(p for p in pts if p >= s_min)
    # geometric refinement of long panels
    out = [pts[0]]
    for b in pts[1:]:
        a = out[-1]
        while b > 4.0 * max(a, 0.25):
            a = 4.0 * max(a, 0.25)
            out.append(a)
        out.append(b)
    return out


def _slab(F, alpha, sigma, d, s, forms, n_r):
    """Spatial integral of G(alpha u_lin) over rho at the times s (all in one panel)."""
    s_mid = 0.5 * (s[0] + s[-1])
    lo_dom = max(0.0, s_mid - 1.0)
    hi_dom = s_mid + 1.0
    cuts = sorted({c0 + c1 * s_mid for c0, c1 in forms if lo_dom < c0 + c1 * s_mid < hi_dom})
    # re-identify the forms of the cuts so they move with s
    chosen = []
    for c in cuts:
        for c0, c1 in forms:
            if abs(c0 + c1 * s_mid - c) < 1e-12 * max(1.0, c):
                chosen.append((c0, c1))
                break
    lo_f = (0.0, 0.0) if s_mid <= 1.0 else (-1.0, 1.0)
    edges = [lo_f] + chosen + [(1.0, 1.0)]
    x, w = _gl(n_r)
    total = np.zeros_like(s)
    for (a0, a1), (b0, b1) in zip(edges[:-1], edges[1:]):
        lo = a0 + a1 * s
        hi = b0 + b1 * s
        width = hi - lo
        rho = lo[:, None] + width[:, None] * x[None, :]
        u = alpha * eval_u_lin(s[:, None], rho)
        g = F.core(u) * u
        if F.mask is not None:
            g = g * F.shell_fraction(d, rho / sigma)
        total += width * ((FOUR_PI * rho * rho * g) @ w)
    return total


def _born_integral_n(F, alpha, sigma, d, s_min, n_s, n_r):
    forms = _rho_forms(F, sigma, d)
    breaks = _s_breaks(F, sigma, d, s_min)
    x, w = _gl(n_s)
    total = 0.0
    for a, b in zip(breaks[:-1], breaks[1:]):
        s = a + (b - a) * x
        total += (b - a) * float(_slab(F, alpha, sigma, d, s, forms, n_r) @ w)
    # tail s = S / q, q in (0, 1]
    S = breaks[-1]
    q = x
    s = S / q
    vals = _slab(F, alpha, sigma, d, s, forms, n_r) * S / q**2
    total += float(vals @ w)
    return 2.0 * total  # u_lin odd in s, G even: both half lines agree


def born_integral(F: NonlinearitySpec, p: ScaleParams, s_min: float = 0.0,
                  n_s: int = 24, n_r: int = 24) -> tuple[float, float]:
    """I = int int G(alpha u_lin(s, |y|)) ds dy over |s| >= s_min in probe coordinates.

    G(u) = F(t0, x0 + y/sigma, u) u.  Built-in nonlinearities are time
    independent and odd, so the two half lines s > 0 and s < 0 contribute
    equally.  Returns (value, error estimate from a doubled rule).
    """
    if F.is_zero:
        return 0.0, 0.0
    d = p.x0_norm
    coarse = _born_integral_n(F, p.alpha, p.sigma, d, s_min, n_s, n_r)
    fine = _born_integral_n(F, p.alpha, p.sigma, d, s_min, 2 * n_s, 2 * n_r)
    return fine, abs(fine - coarse)


def born_functional(F: NonlinearitySpec, p: ScaleParams) -> float:
    """int <F(t, x, u_lin^{alpha,eps}), u_lin^{alpha,eps}>_{L^2_x} dt, centered at (t0, x0)."""
    value, _ = born_integral(F, p)
    return value / p.sigma**4


def normalized_born(F: NonlinearitySpec, p: ScaleParams) -> tuple[float, float]:
    """born_functional divided by 32 pi eps^8 / (3 alpha^2), with its error estimate."""
    value, err = born_integral(F, p)
    k = _hw_factor(p.alpha)
    return k * value, k * err


def _G_prime(F: NonlinearitySpec, p: ScaleParams, lam):
    weight = float(F.mask_at(p.x0_norm))
    return weight * (F.core_du(lam) * lam + F.core(lam))


def born_layer_cake(F: NonlinearitySpec, p: ScaleParams) -> float:
    """hw by the layer-cake route: 3/(16 pi alpha^6) int_0^{2 alpha} G'(lam) m(lam/alpha) dlam.

    Uses F frozen at the probe center, so it is exact for translation-invariant F.
    """
    if F.is_zero:
        return 0.0
    a = p.alpha

    def f(lam):
        return float(_G_prime(F, p, lam) * m_closed(lam / a))

    pts = [0.5 * a, a, 1.5 * a]
    val = integrate.quad(f, 0.0, 2.0 * a, points=pts, epsabs=0.0, epsrel=1e-12, limit=400)[0]
    return 3.0 / (16.0 * np.pi * a**6) * val


def _H_point(F: NonlinearitySpec, t0: float, r0: float, tau):
    u = np.exp(tau)
    return np.exp(-4.0 * tau) * F.du(t0, r0, u) + np.exp(-5.0 * tau) * F(t0, r0, u)


def hw_via_H(F: NonlinearitySpec, p: ScaleParams) -> float:
    """(H * w)(log 2 alpha) by quadrature of H against the kernel, F frozen at the center."""
    if F.is_zero:
        return 0.0
    tau0 = p.tau0
    r0 = p.x0_norm

    def f(s):
        return float(eval_w(s) * _H_point(F, p.t0, r0, tau0 - s))

    return integrate.quad(f, 0.0, W_SUPPORT, points=[0.5, 1.0, 2.0, 4.0],
                          epsabs=0.0, epsrel=1e-12, limit=400)[0]


# --- full PDE measurement ---------------------------------------------------------------


@dataclass(frozen=True)
class PdeSettings:
    """Resolution of the probe-frame solve: cell size, half window |s| <= horizon,
    and whether to Richardson-extrapolate from a run at twice the cell size."""

    dr: float = 0.02
    horizon: float = 16.0
    richardson: bool = True

    def __post_init__(self):
        if not (self.dr > 0 and self.horizon > 0):
            raise ValueError("dr and horizon must be positive")
        if abs(round(self.horizon / self.dr) * self.dr - self.horizon) > 1e-9:
            raise ValueError("horizon must be a multiple of dr")
        if self.richardson and abs(round(self.horizon / (2 * self.dr)) * 2 * self.dr - self.horizon) > 1e-9:
            raise ValueError("horizon must be a multiple of 2 dr for the Richardson estimate")


@dataclass(frozen=True)
class PdePairing:
    """Probe-frame pairing <S(d) - d, (v0, 0)> split into windowed solve and Born tail."""

    window: float
    tail: float
    discretization_error: float

    @property
    def total(self) -> float:
        return self.window + self.tail


def _dual_profile(r):
    # r * v0(r) for the dual probe data v0 = r - 2 (r <= 1), -1/r (r > 1)
    return np.where(r <= 1.0, r * r - 2.0 * r, -1.0)


def _probe_pairing_once(N: NonlinearitySpec, dr: float, T: float, feedback: bool) -> float:
    n_half = int(round(T / dr))
    grid = RadialGrid(r_max=(3 * n_half + int(np.ceil(4.0 / dr))) * dr,
                      n_cells=3 * n_half + int(np.ceil(4.0 / dr)))
    res = solve_perturbation(grid, eval_u_lin, N, -T, T, feedback=feedback)
    _, v0 = free_evolve_levels(res.v_next, res.v_end, n_half)
    phi = _dual_profile(grid.r)
    return FOUR_PI * float(np.sum(np.diff(v0) * np.diff(phi))) / dr


def probe_pairing(F: NonlinearitySpec, p: ScaleParams, settings: PdeSettings | None = None,
                  feedback: bool = True) -> PdePairing:
    """<S(d) - d, (v0, 0)> in probe coordinates for the probe data d = (0, 2/r 1_{r<=1}).

    The nonlinear solve covers |s| <= horizon; the contribution of |s| > horizon
    is the Born integral over that range.  With feedback=False the solve keeps
    only the first Born iterate on the same grid.
    """
    cfg = settings or PdeSettings()
    if not F.translation_invariant and p.x0_norm != 0.0:
        raise ValueError("full_pde mode supports masked nonlinearities only for centers with x0 = 0")
    N = F.probe_frame(p.alpha, p.sigma)
    if N.is_zero:
        return PdePairing(0.0, 0.0, 0.0)
    fine = _probe_pairing_once(N, cfg.dr, cfg.horizon, feedback)
    err = 0.0
    if cfg.richardson:
        # the scheme is second order; extrapolate from (2 dr, dr)
        coarse = _probe_pairing_once(N, 2 * cfg.dr, cfg.horizon, feedback)
        err = abs(fine - coarse) / 3.0
        fine = fine + (fine - coarse) / 3.0
    tail_I, tail_err = born_integral(F, p, s_min=cfg.horizon)
    k = 1.0 / (p.sigma**2 * p.alpha**2)
    return PdePairing(fine, k * tail_I, err + k * tail_err)


def original_units_factor(p: ScaleParams) -> float:
    """Factor turning a probe-frame pairing into the pairing in original coordinates."""
    return p.epsilon**4 / p.alpha**2


def measure_hw_sample(F: NonlinearitySpec, p: ScaleParams, mode: str = "born_oracle",
                      settings: PdeSettings | None = None) -> tuple[float, float, str]:
    """One sample of (H * w)(log 2 alpha) with its error bar and mode tag."""
    if mode == "born_oracle":
        value, err = normalized_born(F, p)
        return value, err, mode
    if mode == "full_pde":
        pr = probe_pairing(F, p, settings)
        k = 3.0 / (32.0 * np.pi * p.epsilon**4)
        value = k * pr.total
        born_bound = abs(value) * p.epsilon**4
        return value, k * pr.discretization_error + born_bound, mode
    raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


# --- sweeps and recovery ----------------------------------------------------------------


@dataclass(frozen=True)
class SweepPlan:
    """tau0 grid, probe smallness and center, measurement mode and budgets."""

    tau_min: float = -3.0
    tau_max: float = 3.0
    tau_step: float = 0.05
    epsilon: float = 0.05
    t0: float = 0.0
    x0: tuple = (0.0, 0.0, 0.0)
    mode: str = "born_oracle"
    pde_budget: int = 16
    pde: PdeSettings = field(default_factory=PdeSettings)
    deconv: DeconvConfig = field(default_factory=DeconvConfig)
    u_min: float = 0.2
    u_max: float = 2.0
    u_step: float = 0.01

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not (self.tau_step > 0 and self.tau_max > self.tau_min):
            raise ValueError("need tau_step > 0 and tau_max > tau_min")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not (0 < self.u_min < self.u_max and self.u_step > 0):
            raise ValueError("need 0 < u_min < u_max and u_step > 0")
        x0 = tuple(float(c) for c in np.broadcast_to(np.asarray(self.x0, float), (3,)))
        object.__setattr__(self, "x0", x0)
        if self.mode == "full_pde" and self.n_samples > self.pde_budget:
            raise ValueError(
                f"full_pde sweep of {self.n_samples} samples exceeds the budget {self.pde_budget}"
            )

    @property
    def n_samples(self) -> int:
        return int(round((self.tau_max - self.tau_min) / self.tau_step)) + 1

    @property
    def tau0_grid(self) -> np.ndarray:
        return self.tau_min + self.tau_step * np.arange(self.n_samples)

    @property
    def u_grid(self) -> np.ndarray:
        n = int(round((self.u_max - self.u_min) / self.u_step)) + 1
        return self.u_min + self.u_step * np.arange(n)

    def params(self, tau0: float) -> ScaleParams:
        return ScaleParams.from_tau0(tau0, self.epsilon, self.t0, self.x0)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["x0"] = list(self.x0)
        return d


@dataclass
class RecoveryReport:
    plan: SweepPlan
    nonlinearity: dict
    hw_samples: SampledFunction
    h_estimate: SampledFunction
    f_estimate: SampledFunction
    f_true: SampledFunction
    diagnostics: dict

    def max_relative_error(self, scale: np.ndarray | None = None) -> float:
        """max |F_rec - F_true| / scale, scale defaulting to |F_true|."""
        ref = np.abs(self.f_true.values) if scale is None else np.abs(scale)
        with np.errstate(divide="ignore", invalid="ignore"):
            e = np.abs(self.f_estimate.values - self.f_true.values) / ref
        return float(np.max(e))

    def to_dict(self) -> dict:
        return _jsonable({
            "plan": self.plan.to_dict(),
            "nonlinearity": self.nonlinearity,
            "hw_samples": self.hw_samples.to_dict(),
            "h_estimate": self.h_estimate.to_dict(),
            "f_estimate": self.f_estimate.to_dict(),
            "f_true": self.f_true.to_dict(),
            "diagnostics": self.diagnostics,
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)


def _measure_task(args):
    F, p, mode, settings = args
    return measure_hw_sample(F, p, mode, settings)


def measure_sweep(F: NonlinearitySpec, plan: SweepPlan, workers: int = 1) -> SampledFunction:
    """hw samples over the plan's tau0 grid; order of completion does not matter."""
    tasks = [(F, plan.params(t), plan.mode, plan.pde) for t in plan.tau0_grid]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_measure_task, tasks))
    else:
        results = [_measure_task(t) for t in tasks]
    vals = np.array([r[0] for r in results])
    errs = np.array([r[1] for r in results])
    return SampledFunction(plan.tau_min, plan.tau_step, vals,
                           {"mode": plan.mode, "error_bars": errs.tolist()})


def recover_from_samples(F: NonlinearitySpec, plan: SweepPlan, hw: SampledFunction) -> RecoveryReport:
    """Deconvolve measured samples and map H back to F on the plan's u grid."""
    h_est = deconvolve(hw, plan.deconv)
    u = plan.u_grid
    f_est = F_from_H(h_est, u)
    lo, hi = h_est.meta["trusted"]
    lu = np.log(u)
    outside = (lu < lo) | (lu > hi)
    f_est.meta["outside_trusted"] = int(np.sum(outside))
    r0 = float(np.linalg.norm(plan.x0))
    f_true = SampledFunction.from_grid(u, F(plan.t0, r0, u))

    K = w_cell_weights(hw.tau_step)
    recon = convolve(h_est, K, extend="edge")
    mid = hw.interior(0.5)
    i0 = int(round((mid.tau_min - hw.tau_min) / hw.tau_step))
    res = recon.values[i0:i0 + len(mid)] - mid.values
    scale = float(np.max(np.abs(mid.values))) or 1.0
    diagnostics = {
        "residual_max_abs": float(np.max(np.abs(res))),
        "residual_rel": float(np.max(np.abs(res)) / scale),
        "regularization": plan.deconv.regularization,
        "min_abs_w_hat": h_est.meta["min_abs_w_hat"],
        "trusted_tau": [lo, hi],
        "f_tail_bound": f_est.meta["tail_bound"],
        "u_outside_trusted": int(np.sum(outside)),
        "max_error_bar": float(np.max(hw.meta.get("error_bars", [0.0]))),
    }
    return RecoveryReport(plan, F.to_dict(), hw, h_est, f_est, f_true, diagnostics)


def run_sweep(F: NonlinearitySpec, plan: SweepPlan, workers: int = 1) -> RecoveryReport:
    """Measure hw over the tau0 grid, deconvolve, and recover F at the plan's center."""
    hw = measure_sweep(F, plan, workers)
    return recover_from_samples(F, plan, hw)


# --- localization ---------------------------------------------------------------------------


@dataclass
class LocalizationRow:
    x0_norm: float
    epsilon: float
    value: float
    limit: float | None
    deviation: float | None


@dataclass
class CenterSummary:
    x0_norm: float
    kind: str  # interior, exterior or boundary
    limit: float | None  # None on the mask boundary
    monotone: bool | None
    rate: float | None
    recovery_error: float | None = None


@dataclass
class LocalizationTable:
    rows: list
    centers: list
    alpha: float
    tolerance: float = 0.05

    @property
    def passed(self) -> bool:
        ok = True
        for c in self.centers:
            if c.kind == "boundary":
                continue
            ok &= bool(c.monotone)
            if c.recovery_error is not None:
                ok &= c.recovery_error < self.tolerance
        return ok

    def to_dict(self) -> dict:
        return _jsonable({"alpha": self.alpha, "tolerance": self.tolerance,
                          "rows": [asdict(r) for r in self.rows],
                          "centers": [asdict(c) for c in self.centers]})


def _center_kind(F: NonlinearitySpec, d: float, tol: float = 1e-9) -> str:
    if F.boundary_distance(d) < tol:
        return "boundary"
    return "interior" if F.mask_at(d) > 0 else "exterior"


def localization_experiment(
    F: NonlinearitySpec,
    centers,
    epsilon_schedule=(0.4, 0.2, 0.1),
    alpha: float = 1.0,
    recover: bool = True,
    recover_plan: SweepPlan | None = None,
    workers: int = 1,
    tolerance: float = 0.05,
) -> LocalizationTable:
    """Normalized Born values at shrinking eps for each center, against the pointwise limit.

    Centers on the mask boundary are reported but excluded from pass/fail.
    With recover=True a full oracle sweep (at the small eps of recover_plan)
    recovers F at every non-boundary center.
    """
    rows, summaries = [], []
    base = recover_plan or SweepPlan(epsilon=1e-3)
    for c in centers:
        x0 = tuple(np.broadcast_to(np.asarray(c, float), (3,))) if np.ndim(c) else (float(c), 0.0, 0.0)
        d = float(np.linalg.norm(x0))
        kind = _center_kind(F, d)
        # the mask jumps at a boundary center, so there is no single pointwise limit
        limit = None if kind == "boundary" else hw_via_H(F, ScaleParams(alpha, 1.0, x0=x0))
        devs = []
        for eps in epsilon_schedule:
            val, _ = normalized_born(F, ScaleParams(alpha, eps, x0=x0))
            dev = None if limit is None else abs(val - limit)
            devs.append(dev)
            rows.append(LocalizationRow(d, float(eps), val, limit, dev))
        eps_arr = np.asarray(epsilon_schedule, float)
        order = np.argsort(-eps_arr)
        dv = np.asarray([np.nan if x is None else x for x in devs])[order]
        monotone = None if kind == "boundary" else bool(np.all(np.diff(dv) <= 0))
        rate = None
        if limit is not None and np.all(dv > 0):
            rate = float(np.polyfit(np.log(eps_arr[order]), np.log(dv), 1)[0])
        rec_err = None
        if recover and kind != "boundary":
            plan = replace(base, x0=x0, mode="born_oracle")
            rep = run_sweep(F, plan, workers)
            scale = np.abs(F.core(plan.u_grid))
            rec_err = rep.max_relative_error(scale)
        summaries.append(CenterSummary(d, kind, limit, monotone, rate, rec_err))
    return LocalizationTable(rows, summaries, alpha, tolerance)


# --- Born error scaling -------------------------------------------------------------------


@dataclass
class ScalingReport:
    epsilons: list
    pairing_full: list
    pairing_born_grid: list
    pairing_born: list
    differences: list
    slope: float | None
    slope_born: float | None
    fit_residual: float | None
    floor: float
    floor_limited: bool
    largest_pair_slope: float | None
    partial: bool = False

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))


def _fit(x, y):
    A = np.vstack([np.log(x), np.ones_like(x)]).T
    coef, res, *_ = np.linalg.lstsq(A, np.log(y), rcond=None)
    resid = float(np.sqrt(res[0] / len(x))) if res.size else 0.0
    return float(coef[0]), resid


def born_scaling_study(
    F: NonlinearitySpec,
    epsilons=(0.2, 0.1, 0.05),
    alpha: float = 1.0,
    settings: PdeSettings | None = None,
    floor_rel: float = 1e-11,
    time_budget: float | None = None,
) -> ScalingReport:
    """Fit the log-log slope of |pairing_full - pairing_born| against eps.

    Pairings are reported in original coordinates.  The Born reference is the
    first Born iterate on the same grid, so that the discretization error of
    the linear response cancels in the difference; the quadrature Born value
    is reported alongside.  Differences below floor_rel * |pairing| are
    floor-limited and left out of the fit.  If time_budget (seconds) runs out,
    the remaining eps values are skipped and the report is marked partial.
    """
    eps = np.asarray(sorted(set(float(e) for e in epsilons), reverse=True))
    if eps.size < 3:
        raise ValueError("the scaling study needs at least 3 distinct eps values")
    cfg = replace(settings or PdeSettings(), richardson=False)
    full, grid_born, born, diff = [], [], [], []
    start = time.monotonic()
    partial = False
    for e in eps:
        if time_budget is not None and time.monotonic() - start > time_budget:
            partial = True
            break
        p = ScaleParams(alpha, e)
        k = original_units_factor(p)
        pf = probe_pairing(F, p, cfg, feedback=True)
        pb = probe_pairing(F, p, cfg, feedback=False)
        I, _ = born_integral(F, p)
        full.append(k * pf.total)
        grid_born.append(k * pb.total)
        born.append(I / p.sigma**4)
        diff.append(abs(k * (pf.window - pb.window)))
    eps = eps[: len(diff)]
    diff = np.asarray(diff)
    scale = max((abs(b) for b in grid_born), default=0.0)
    floor = floor_rel * scale
    ok = diff > floor
    slope = resid = pair = None
    if np.sum(ok) >= 2:
        slope, resid = _fit(eps[ok], diff[ok])
    if ok.size >= 2 and ok[0] and ok[1]:
        pair = float(np.log(diff[0] / diff[1]) / np.log(eps[0] / eps[1]))
    born_arr = np.abs(np.asarray(born))
    slope_born = _fit(eps, born_arr)[0] if born_arr.size >= 2 and np.all(born_arr > 0) else None
    return ScalingReport(eps.tolist(), full, grid_born, born, diff.tolist(), slope, slope_born,
                         resid, floor, bool(not np.all(ok)), pair, partial)


def born_regime_selftest(F: NonlinearitySpec, p: ScaleParams, settings: PdeSettings | None = None,
                         rtol: float = 1e-2) -> bool:
    """Compare full_pde hw at eps and eps/2; warn if they differ by more than rtol."""
    try:
        a = measure_hw_sample(F, p, "full_pde", settings)[0]
        b = measure_hw_sample(F, replace(p, epsilon=p.epsilon / 2), "full_pde", settings)[0]
        ok = abs(a - b) <= rtol * max(abs(a), abs(b), 1e-300)
    except BlowupError:
        ok = False
    if not ok:
        warnings.warn(f"eps = {p.epsilon} fails the Born-regime self-test", BornRegimeWarning)
    return ok


__all__ = [
    "MODES",
    "BornRegimeWarning",
    "born_integral",
    "born_functional",
    "normalized_born",
    "born_layer_cake",
    "hw_via_H",
    "PdeSettings",
    "PdePairing",
    "probe_pairing",
    "original_units_factor",
    "measure_hw_sample",
    "SweepPlan",
    "RecoveryReport",
    "measure_sweep",
    "recover_from_samples",
    "run_sweep",
    "localization_experiment",
    "LocalizationTable",
    "born_scaling_study",
    "ScalingReport",
    "born_regime_selftest",
]
