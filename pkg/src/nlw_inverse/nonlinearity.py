"""Nonlinearities F(t, x, u) for the semilinear wave equation.

Every built-in family is separable, F(t, x, u) = mask(|x|) * coef * core(amp * u),
with the mask an indicator of a radial shell (or identically one).  The
``amp`` and ``coef`` fields let a nonlinearity be rewritten in probe-rescaled
coordinates without changing family.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import CubicSpline

FAMILIES = ("quintic", "masked_quintic", "rational_quintic", "power", "tabulated")


@dataclass(frozen=True)
class NonlinearitySpec:
    """A described nonlinearity.

    family:    one of FAMILIES
    coef:      overall multiplier (sign +1/-1 gives focusing/defocusing quintic)
    power:     exponent for the ``power`` family (odd, e.g. 3 for an inadmissible probe)
    mask:      (r_lo, r_hi) radial shell for ``masked_quintic``; r_lo may be 0
    table:     (u_grid, values) for ``tabulated``; u_grid increasing and positive
    amp:       F is evaluated at amp*u (probe rescaling); 1 for user-facing specs
    c_f:       admissibility constant in |F(u) - F(v)| <= c_f (|u|^4 + |v|^4)|u - v|
    """

    family: str
    coef: float = 1.0
    power: int = 5
    mask: tuple | None = None
    table: tuple | None = None
    amp: float = 1.0
    c_f: float = 5.0
    _spline: object = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.family == "masked_quintic":
            if self.mask is None:
                raise ValueError("masked_quintic needs a mask=(r_lo, r_hi)")
            lo, hi = (float(m) for m in self.mask)
            if not 0 <= lo < hi:
                raise ValueError(f"mask must satisfy 0 <= r_lo < r_hi, got {self.mask}")
            object.__setattr__(self, "mask", (lo, hi))
        if self.family == "tabulated":
            if self.table is None:
                raise ValueError("tabulated needs table=(u_grid, values)")
            ug = np.asarray(self.table[0], dtype=float)
            fv = np.asarray(self.table[1], dtype=float)
            if ug.ndim != 1 or ug.shape != fv.shape or ug.size < 3:
                raise ValueError("table must be two equal-length 1D arrays of >= 3 points")
            if np.any(ug <= 0) or np.any(np.diff(ug) <= 0):
                raise ValueError("table u_grid must be positive and increasing")
            object.__setattr__(self, "table", (tuple(ug), tuple(fv)))
            # odd extension through the origin
            uu = np.concatenate([-ug[::-1], [0.0], ug])
            ff = np.concatenate([-fv[::-1], [0.0], fv])
            object.__setattr__(self, "_spline", CubicSpline(uu, ff))

    # constructors --------------------------------------------------------

    @classmethod
    def quintic(cls, sign: float = 1.0) -> "NonlinearitySpec":
        return cls("quintic", coef=float(sign))

    @classmethod
    def masked_quintic(cls, radius_hi: float, radius_lo: float = 0.0, sign: float = 1.0):
        return cls("masked_quintic", coef=float(sign), mask=(radius_lo, radius_hi))

    @classmethod
    def rational_quintic(cls, coef: float = 1.0) -> "NonlinearitySpec":
        """F(u) = coef * u^5 / (1 + u^2)."""
        return cls("rational_quintic", coef=float(coef))

    @classmethod
    def power_law(cls, power: int, coef: float = 1.0) -> "NonlinearitySpec":
        return cls("power", coef=float(coef), power=int(power), c_f=float(abs(power)))

    @classmethod
    def tabulated(cls, u_grid, values, c_f: float = 5.0) -> "NonlinearitySpec":
        return cls("tabulated", table=(u_grid, values), c_f=float(c_f))

    @classmethod
    def zero(cls) -> "NonlinearitySpec":
        return cls("quintic", coef=0.0)

    # transformations -----------------------------------------------------

    def scaled(self, c: float) -> "NonlinearitySpec":
        return replace(self, coef=self.coef * c)

    def probe_frame(self, alpha: float, sigma: float) -> "NonlinearitySpec":
        """The source sigma^-2 alpha^-1 F(alpha u) seen in probe coordinates.

        Valid for probes centered at the origin; masks are stretched by sigma.
        """
        mask = None if self.mask is None else (self.mask[0] * sigma, self.mask[1] * sigma)
        return replace(
            self, coef=self.coef / (sigma**2 * alpha), amp=self.amp * alpha, mask=mask
        )

    @property
    def translation_invariant(self) -> bool:
        return self.mask is None

    @property
    def is_zero(self) -> bool:
        return self.coef == 0.0

    # evaluation ----------------------------------------------------------

    def _core(self, u):
        if self.family in ("quintic", "masked_quintic"):
            return u**5
        if self.family == "rational_quintic":
            return u**5 / (1.0 + u * u)
        if self.family == "power":
            return np.sign(u) * np.abs(u) ** self.power
        return self._spline(u)

    def _core_du(self, u):
        if self.family in ("quintic", "masked_quintic"):
            return 5.0 * u**4
        if self.family == "rational_quintic":
            u2 = u * u
            return (5.0 * u2 * u2 + 3.0 * u2 * u2 * u2) / (1.0 + u2) ** 2
        if self.family == "power":
            return self.power * np.abs(u) ** (self.power - 1)
        # central differences, one table cell wide
        ug = np.asarray(self.table[0])
        cells = np.diff(np.concatenate([[0.0], ug]))
        idx = np.clip(np.searchsorted(ug, np.abs(u)), 0, cells.size - 1)
        h = cells[idx]
        return (self._spline(u + h) - self._spline(u - h)) / (2.0 * h)

    def core(self, u):
        """coef * core(amp * u): F at a point where the mask equals one."""
        u = np.asarray(u, dtype=float)
        return self.coef * self._core(self.amp * u)

    def core_du(self, u):
        u = np.asarray(u, dtype=float)
        return self.coef * self.amp * self._core_du(self.amp * u)

    def mask_at(self, r):
        """Spatial weight at radius |x| = r."""
        r = np.asarray(r, dtype=float)
        if self.mask is None:
            return np.ones_like(r)
        lo, hi = self.mask
        return ((r >= lo) & (r <= hi)).astype(float)

    def __call__(self, t, r, u):
        """F(t, x, u) at |x| = r (all built-ins are time independent)."""
        return self.mask_at(r) * self.core(u)

    def du(self, t, r, u):
        return self.mask_at(r) * self.core_du(u)

    def shell_fraction(self, d: float, a):
        """Average of the mask over the sphere of radius a centered at distance d."""
        a = np.asarray(a, dtype=float)
        if self.mask is None:
            return np.ones_like(a)
        lo, hi = self.mask
        out = _ball_fraction(d, a, hi)
        if lo > 0:
            out = out - _ball_fraction(d, a, lo)
        return out

    def mask_breaks(self, d: float) -> list[float]:
        """Sphere radii around a center at distance d where shell_fraction has kinks."""
        if self.mask is None:
            return []
        out = []
        for rad in self.mask:
            if rad > 0:
                out += [abs(d - rad), d + rad]
        return sorted(b for b in set(out) if b > 0)

    def boundary_distance(self, d: float) -> float:
        """Distance from a point at |x| = d to the mask boundary (inf if unmasked)."""
        if self.mask is None:
            return np.inf
        return min(abs(d - rad) for rad in self.mask if rad > 0)

    def to_dict(self) -> dict:
        out = {"family": self.family, "coef": self.coef}
        if self.family == "power":
            out["power"] = self.power
        if self.mask is not None:
            out["mask"] = list(self.mask)
        if self.table is not None:
            out["table"] = [list(self.table[0]), list(self.table[1])]
        if self.amp != 1.0:
            out["amp"] = self.amp
        out["c_f"] = self.c_f
        return out


def _ball_fraction(d: float, a, radius: float):
    """Fraction of the sphere {|y - c| = a}, |c| = d, lying inside {|y| <= radius}."""
    a = np.asarray(a, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        c = (radius**2 - d**2 - a**2) / (2.0 * d * a)
        frac = 0.5 * (1.0 + np.clip(c, -1.0, 1.0))
    if d == 0:
        return (a <= radius).astype(float)
    frac = np.where(a == 0, float(d <= radius), frac)
    return frac


@dataclass
class ConditionResult:
    name: str
    passed: bool
    worst: float
    witness: tuple | None = None


@dataclass
class AdmissibilityReport:
    conditions: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    def __getitem__(self, name: str) -> ConditionResult:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)


def check_admissible(
    F: NonlinearitySpec,
    u_max: float = 4.0,
    u_min: float = 1e-3,
    n_u: int = 41,
    n_points: int = 8,
    r_max: float = 4.0,
    seed: int = 0,
) -> AdmissibilityReport:
    """Evaluate the three admissibility conditions on a finite lattice.

    (i) F(t, x, 0) = 0, (ii) the quintic Lipschitz bound with constant F.c_f,
    (iii) oddness in u.  The lattice mixes log-spaced magnitudes down to u_min
    with seeded random (t, |x|) points, so a bound that fails only near u = 0
    (a cubic, say) is caught.
    """
    rng = np.random.default_rng(seed)
    mags = np.geomspace(u_min, u_max, n_u)
    us = np.concatenate([-mags[::-1], mags])
    ts = rng.uniform(-2.0, 2.0, n_points)
    rs = rng.uniform(0.0, r_max, n_points)
    if F.mask is not None:
        rs = np.concatenate([rs, [0.5 * (F.mask[0] + F.mask[1])]])
        ts = np.concatenate([ts, [0.0]])

    worst0, wit0 = 0.0, None
    worst2, wit2 = 0.0, None
    worst3, wit3 = 0.0, None
    U, V = np.meshgrid(us, us, indexing="ij")
    off = U != V
    for t, r in zip(ts, rs):
        f0 = abs(float(F(t, r, 0.0)))
        if f0 > worst0:
            worst0, wit0 = f0, (float(t), float(r), 0.0)
        fu = F(t, r, us)
        odd = np.abs(F(t, r, -us) + fu)
        k = int(np.argmax(odd))
        if odd[k] > worst3:
            worst3, wit3 = float(odd[k]), (float(t), float(r), float(us[k]))
        FU = F(t, r, U)
        FV = F(t, r, V)
        ratio = np.abs(FU - FV)[off] / ((U**4 + V**4) * np.abs(U - V))[off]
        k = int(np.argmax(ratio))
        if ratio[k] > worst2:
            worst2, wit2 = float(ratio[k]), (float(t), float(r), float(U[off][k]), float(V[off][k]))

    scale = max(1.0, float(np.max(np.abs(F.core(mags)))))
    return AdmissibilityReport(
        [
            ConditionResult("vanishing", worst0 == 0.0, worst0, wit0),
            ConditionResult("lipschitz", worst2 <= F.c_f * (1 + 1e-9), worst2, wit2),
            ConditionResult("odd", worst3 <= 1e-12 * scale, worst3, wit3),
        ]
    )
