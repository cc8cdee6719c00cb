"""The convolution kernel w, its Fourier transform, and deconvolution.

Transform convention: g_hat(xi) = int g(tau) exp(-i xi tau) d tau, no prefactor.
Under it the leading part w0(tau) = exp(-3 tau)/2 on tau > 0 has transform
1/(6 + 2 i xi).
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft
from scipy import integrate

from .closed_forms import m_closed
from .nonlinearity import NonlinearitySpec

W_SUPPORT = 12.0  # w is cut at tau = 12, where exp(-36) is below double precision
W_INTEGRAL = 40.0 * np.log(2.0) - 27.5

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


class ConfigurationError(ValueError):
    """Inputs that do not fit together (grid mismatch, bad config values)."""


class WindowTooSmallError(ValueError):
    def __init__(self, n: int, length: float, n_min: int, length_min: float):
        super().__init__(
            f"deconvolution window has {n} samples spanning {length:.3g}; "
            f"need at least {n_min} samples spanning {length_min:.3g}"
        )
        self.required_samples = n_min
        self.required_length = length_min


# --- sampled functions --------------------------------------------------------


@dataclass
class SampledFunction:
    """Samples values[k] of a function at tau_min + k * tau_step."""

    tau_min: float
    tau_step: float
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = np.asarray(self.values)
        if not np.iscomplexobj(vals):
            vals = vals.astype(float)
        if vals.ndim != 1 or vals.size == 0:
            raise ValueError("values must be a non-empty 1D array")
        if not np.all(np.isfinite(vals)):
            raise ValueError("values must be finite")
        if not self.tau_step > 0:
            raise ValueError(f"tau_step must be positive, got {self.tau_step}")
        self.values = vals
        self.tau_min = float(self.tau_min)
        self.tau_step = float(self.tau_step)

    @classmethod
    def from_grid(cls, tau, values, meta=None) -> "SampledFunction":
        tau = np.asarray(tau, dtype=float)
        if tau.size < 2:
            step = 1.0
        else:
            steps = np.diff(tau)
            step = float(steps.mean())
            if np.max(np.abs(steps - step)) > 1e-9 * max(1.0, abs(step)):
                raise ConfigurationError("grid is not uniform")
        return cls(float(tau[0]), step, np.asarray(values), dict(meta or {}))

    def __len__(self) -> int:
        return self.values.size

    @property
    def tau(self) -> np.ndarray:
        return self.tau_min + self.tau_step * np.arange(self.values.size)

    @property
    def tau_max(self) -> float:
        return self.tau_min + self.tau_step * (self.values.size - 1)

    def interior(self, fraction: float) -> "SampledFunction":
        """The central `fraction` of the samples."""
        n = len(self)
        drop = int(round(n * (1.0 - fraction) / 2.0))
        sl = slice(drop, n - drop if drop else n)
        return SampledFunction(self.tau_min + drop * self.tau_step, self.tau_step,
                               self.values[sl], dict(self.meta))

    def __call__(self, tau):
        return np.interp(tau, self.tau, self.values)

    # serialization ---------------------------------------------------------

    def to_csv(self, header: dict | None = None, names=("tau", "value")) -> str:
        buf = io.StringIO()
        for k, v in (header or {}).items():
            buf.write(f"# {k}: {v}\n")
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(names)
        for t, v in zip(self.tau, self.values):
            wr.writerow([repr(float(t)), repr(float(v))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SampledFunction":
        rows = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
        data = list(csv.reader(rows[1:]))
        tau = [float(r[0]) for r in data]
        vals = [float(r[1]) for r in data]
        return cls.from_grid(tau, vals)

    def to_dict(self) -> dict:
        vals = self.values
        if np.iscomplexobj(vals):
            payload = {"real": vals.real.tolist(), "imag": vals.imag.tolist()}
        else:
            payload = vals.tolist()
        return {"tau_min": self.tau_min, "tau_step": self.tau_step,
                "values": payload, "meta": _jsonable(self.meta)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "SampledFunction":
        vals = d["values"]
        if isinstance(vals, dict):
            vals = np.asarray(vals["real"]) + 1j * np.asarray(vals["imag"])
        return cls(d["tau_min"], d["tau_step"], np.asarray(vals), dict(d.get("meta", {})))

    @classmethod
    def from_json(cls, text: str) -> "SampledFunction":
        return cls.from_dict(json.loads(text))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


# --- the kernel -------------------------------------------------------------------


def eval_w(tau):
    """w(tau) = (e^{-3 tau} - 4 e^{-6 tau} / (e^{-tau} + 1)^3) for tau > 0, else 0."""
    tau = np.asarray(tau, dtype=float)
    pos = tau > 0
    e = np.exp(-np.where(pos, tau, 1.0))
    e3 = e * e * e
    out = np.where(pos, e3 - 4.0 * e3 * e3 / (e + 1.0) ** 3, 0.0)
    return out[()] if out.ndim == 0 else out


def w_from_m(tau):
    """(12/pi) e^{-6 tau} m(2 e^{-tau}): the kernel through the distribution function."""
    tau = np.asarray(tau, dtype=float)
    # powers of one rounded exp(-tau); exp(-6 tau) directly would carry an
    # argument rounding error amplified by 6 tau
    e = np.exp(-tau)
    lam = 2.0 * e
    e3 = e * e * e
    out = (12.0 / np.pi) * (e3 * e3) * m_closed(lam)
    out = np.where(lam < 2.0, out, 0.0)
    return out[()] if out.ndim == 0 else out


def eval_w0(tau):
    tau = np.asarray(tau, dtype=float)
    out = np.where(tau > 0, 0.5 * np.exp(-3.0 * np.where(tau > 0, tau, 0.0)), 0.0)
    return out[()] if out.ndim == 0 else out


def eval_w1(tau):
    """w - w0; nonnegative on tau > 0."""
    return eval_w(tau) - eval_w0(tau)


def w0_hat(xi):
    return 1.0 / (6.0 + 2.0j * np.asarray(xi, dtype=float))


@dataclass(frozen=True)
class QuadSpec:
    """Quadrature controls for transforms of w.

    The grid route uses composite 16-point Gauss-Legendre on panels of width
    `panel` over (0, t_max); the pointwise route uses adaptive QUADPACK.
    """

    epsabs: float = 1e-13
    epsrel: float = 1e-12
    panel: float = 0.05
    t_max: float = 40.0
    limit: int = 400


def w_hat(xi: float, quad_spec: QuadSpec | None = None, part: str = "w") -> complex:
    """Fourier transform of w (or of w1 with part='w1') at one frequency, adaptively."""
    q = quad_spec or QuadSpec()
    g = {"w": eval_w, "w1": eval_w1, "w0": eval_w0}[part]
    xi = float(xi)
    kw = dict(epsabs=q.epsabs, epsrel=q.epsrel, limit=q.limit)
    if xi == 0.0:
        return complex(integrate.quad(lambda t: float(g(t)), 0.0, np.inf, **kw)[0], 0.0)
    re = integrate.quad(lambda t: float(g(t)), 0.0, np.inf, weight="cos", wvar=xi,
                        epsabs=q.epsabs, limlst=200)[0]
    im = integrate.quad(lambda t: float(g(t)), 0.0, np.inf, weight="sin", wvar=xi,
                        epsabs=q.epsabs, limlst=200)[0]
    return complex(re, -im)


def w_hat_grid(xis, quad_spec: QuadSpec | None = None, part: str = "w", chunk: int = 512):
    """Vectorized transform on many frequencies by composite Gauss-Legendre."""
    q = quad_spec or QuadSpec()
    g = {"w": eval_w, "w1": eval_w1, "w0": eval_w0}[part]
    xis = np.asarray(xis, dtype=float)
    n_pan = int(np.ceil(q.t_max / q.panel))
    left = np.arange(n_pan) * q.panel
    nodes = (left[:, None] + q.panel * _GL_X[None, :]).ravel()
    weights = np.tile(q.panel * _GL_W, n_pan) * g(nodes)
    flat = xis.ravel()
    out = np.empty(flat.size, dtype=complex)
    for s in range(0, flat.size, chunk):
        x = flat[s:s + chunk]
        out[s:s + chunk] = np.exp(-1j * np.outer(x, nodes)) @ weights
    return out.reshape(xis.shape)


def w_hat_lower_bound(xi):
    """Certified lower bound |w0_hat| - min(1/12, 1/(3|xi|)) on |w_hat(xi)|."""
    xi = np.abs(np.asarray(xi, dtype=float))
    w0 = 1.0 / (2.0 * np.sqrt(9.0 + xi * xi))
    with np.errstate(divide="ignore"):
        w1_bound = np.minimum(1.0 / 12.0, 1.0 / (3.0 * xi))
    out = w0 - w1_bound
    return out[()] if out.ndim == 0 else out


def w_cell_weights(step: float, t_max: float = W_SUPPORT) -> SampledFunction:
    """Hat-function averages K_k = (1/step) int w(tau) hat(tau/step - k) d tau.

    With these weights the discrete convolution step * sum_k K_k H_{j-k} is exact
    for piecewise-linear H, and step * sum K = int_0^t_max w.
    """
    n_cells = int(np.ceil(t_max / step))
    k = np.arange(n_cells)
    tau = step * (k[:, None] + _GL_X[None, :])
    wv = eval_w(tau)
    left = wv @ (_GL_W * (1.0 - _GL_X))
    right = wv @ (_GL_W * _GL_X)
    K = np.zeros(n_cells + 1)
    K[:-1] += left
    K[1:] += right
    return SampledFunction(0.0, step, K, {"kind": "w_cell_weights", "t_max": t_max})


def w_samples(step: float, t_max: float = W_SUPPORT) -> SampledFunction:
    """Plain point samples of w on [0, t_max]."""
    tau = step * np.arange(int(np.ceil(t_max / step)) + 1)
    return SampledFunction(0.0, step, eval_w(tau), {"kind": "w_samples", "t_max": t_max})


# --- convolution and deconvolution --------------------------------------------------------


def _check_steps(a: SampledFunction, b: SampledFunction):
    if abs(a.tau_step - b.tau_step) > 1e-12 * max(a.tau_step, b.tau_step):
        raise ConfigurationError(
            f"grid mismatch: tau_step {a.tau_step} vs {b.tau_step}"
        )


def convolve(h: SampledFunction, w_kernel: SampledFunction, extend: str = "valid"):
    """Discrete approximation of (h * w)(tau) = int h(s) w(tau - s) ds.

    w_kernel holds the kernel on [0, T_w] (point samples or w_cell_weights).
    extend='valid' returns only outputs whose kernel window lies inside h;
    extend='edge' continues h to the left by its first value.
    """
    _check_steps(h, w_kernel)
    if abs(w_kernel.tau_min) > 1e-12:
        raise ConfigurationError("kernel samples must start at tau = 0")
    step = h.tau_step
    k = w_kernel.values
    hv = h.values
    if extend == "edge":
        hv = np.concatenate([np.full(k.size - 1, hv[0]), hv])
        out = step * np.convolve(hv, k, mode="valid")
        return SampledFunction(h.tau_min, step, out)
    if extend != "valid":
        raise ConfigurationError(f"extend must be 'valid' or 'edge', got {extend!r}")
    if hv.size < k.size:
        raise ConfigurationError(
            f"h has {hv.size} samples but the kernel needs {k.size} for a valid output"
        )
    out = step * np.convolve(hv, k, mode="valid")
    return SampledFunction(h.tau_min + (k.size - 1) * step, step, out)


@dataclass(frozen=True)
class DeconvConfig:
    """Tikhonov parameter, padding multiple, taper, and trusted window share.

    window: 'edge-cosine' pads with the edge values and tapers them to zero
    inside the padding; 'cosine' tapers the data itself (Tukey, 25% each side)
    and zero pads; 'none' zero pads untapered.
    """

    regularization: float = 1e-10
    pad_factor: int = 4
    window: str = "edge-cosine"
    trusted_fraction: float = 0.8

    def __post_init__(self):
        if not self.regularization >= 0:
            raise ConfigurationError("regularization must be >= 0")
        if int(self.pad_factor) != self.pad_factor or self.pad_factor < 2:
            raise ConfigurationError("pad_factor must be an integer >= 2")
        if self.window not in ("edge-cosine", "cosine", "none"):
            raise ConfigurationError(f"unknown window {self.window!r}")
        if not 0 < self.trusted_fraction <= 1:
            raise ConfigurationError("trusted_fraction must lie in (0, 1]")


MIN_WINDOW_SAMPLES = 16
MIN_WINDOW_LENGTH = 2.0


def _ramp(n: int) -> np.ndarray:
    return 0.5 * (1.0 - np.cos(np.pi * (np.arange(n) + 0.5) / n))


def deconvolve(g: SampledFunction, config: DeconvConfig | None = None) -> SampledFunction:
    """Estimate H from samples of H * w by regularized frequency-domain division.

    H_hat = G_hat conj(W_hat) / (|W_hat|^2 + mu).  Output is on the grid of g;
    meta['trusted'] gives the (tau_lo, tau_hi) range considered reliable.
    """
    cfg = config or DeconvConfig()
    n = len(g)
    step = g.tau_step
    length = (n - 1) * step
    if n < MIN_WINDOW_SAMPLES or length < MIN_WINDOW_LENGTH * (1 - 1e-9):
        raise WindowTooSmallError(n, length, MIN_WINDOW_SAMPLES, MIN_WINDOW_LENGTH)

    K = w_cell_weights(step).values
    n_total = sfft.next_fast_len(max(cfg.pad_factor * n, n + 2 * K.size))
    n_left = (n_total - n) // 2
    n_right = n_total - n - n_left
    gv = np.asarray(g.values, dtype=float)
    if cfg.window == "edge-cosine":
        left = gv[0] * _ramp(n_left)
        right = gv[-1] * _ramp(n_right)[::-1]
        data = np.concatenate([left, gv, right])
    else:
        body = gv.copy()
        if cfg.window == "cosine":
            m = max(1, n // 4)
            body[:m] *= _ramp(m)
            body[-m:] *= _ramp(m)[::-1]
        data = np.concatenate([np.zeros(n_left), body, np.zeros(n_right)])

    kern = np.zeros(n_total)
    kern[: K.size] = K
    W = step * sfft.fft(kern)
    if not np.min(np.abs(W)) > 0:
        raise ArithmeticError("discrete kernel transform vanishes; cannot deconvolve")
    G = sfft.fft(data)
    mu = cfg.regularization
    Hh = sfft.ifft(G * np.conj(W) / (np.abs(W) ** 2 + mu)).real
    out = Hh[n_left:n_left + n]
    trusted = g.interior(cfg.trusted_fraction)
    meta = {
        "regularization": mu,
        "window": cfg.window,
        "pad_total": int(n_total),
        "min_abs_w_hat": float(np.min(np.abs(W))),
        "trusted": [trusted.tau_min, trusted.tau_max],
    }
    return SampledFunction(g.tau_min, step, out, meta)


# --- H <-> F change of variables ------------------------------------------------


def H_from_F(F: NonlinearitySpec, t0: float, x0, tau_grid) -> SampledFunction:
    """H(tau) = e^{-4 tau} dF/du(t0, x0, e^tau) + e^{-5 tau} F(t0, x0, e^tau)."""
    tau = np.asarray(tau_grid, dtype=float)
    r0 = float(np.linalg.norm(np.broadcast_to(np.asarray(x0, float), (3,))))
    u = np.exp(tau)
    vals = np.exp(-4.0 * tau) * F.du(t0, r0, u) + np.exp(-5.0 * tau) * F(t0, r0, u)
    return SampledFunction.from_grid(tau, vals, {"t0": t0, "x0_norm": r0})


def _exp6_linear(a, slope, d):
    # int_0^d e^{6x} (a + slope x) dx
    e = np.exp(6.0 * d)
    return a * (e - 1.0) / 6.0 + slope * (e * (6.0 * d - 1.0) + 1.0) / 36.0


def F_from_H(h: SampledFunction, u_grid) -> SampledFunction:
    """Invert H -> F: F(u) = u^{-1} int_{-inf}^{log u} e^{6s} H(s) ds.

    H is taken piecewise linear between samples (integrated exactly) and
    constant H(tau_min) below the grid; that tail and any extrapolation past
    tau_max are recorded in meta.
    """
    u = np.asarray(u_grid, dtype=float)
    if np.any(u <= 0):
        raise ValueError("F_from_H is defined for u > 0; use oddness for u < 0")
    s = h.tau
    H = np.asarray(h.values, dtype=float)
    d = h.tau_step
    # cumulative integral at nodes, scaled by e^{-6 s_j} to avoid overflow
    slopes = np.diff(H) / d
    cell = _exp6_linear(H[:-1], slopes, d)  # times e^{6 s_j}
    cum = np.empty(H.size)
    cum[0] = H[0] / 6.0  # constant tail below tau_min, times e^{-6 s_0}
    decay = np.exp(-6.0 * d)
    for j in range(1, H.size):
        cum[j] = (cum[j - 1] + cell[j - 1]) * decay
    # cum[j] now holds e^{-6 s_j} int_{-inf}^{s_j} e^{6s} H ds
    lu = np.log(u)
    j = np.clip(np.floor((lu - s[0]) / d).astype(int), 0, H.size - 1)
    below = lu < s[0]
    above = lu > s[-1]
    frac = lu - s[j]
    slope_j = np.where(j < H.size - 1, np.concatenate([slopes, [0.0]])[j], 0.0)
    # value at log u: e^{6 s_j}(cum_j + partial) ; F = e^{-lu} * that
    partial = _exp6_linear(H[j], slope_j, frac)
    vals = np.exp(6.0 * s[j] - lu) * (cum[j] + partial)
    vals = np.where(below, H[0] * np.exp(5.0 * lu) / 6.0, vals)
    tail = float(np.max(np.abs(H))) * np.exp(6.0 * s[0]) / 6.0
    meta = {
        "tail_bound": tail,
        "n_extrapolated": int(np.sum(above | below)),
        "tau_range": [float(s[0]), float(s[-1])],
    }
    return SampledFunction.from_grid(u, vals, meta)
