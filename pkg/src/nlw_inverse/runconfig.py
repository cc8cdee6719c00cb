"""Run configuration (INI files with CLI overrides) and deterministic output writers."""

from __future__ import annotations

import configparser
import csv
import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .nonlinearity import NonlinearitySpec


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration (CLI exit code 2)."""


# Every recognized key with its default, as strings (the INI representation).
DEFAULTS: dict[str, dict[str, str]] = {
    "run": {"out": "out", "workers": "0", "seed": "0"},
    "nonlinearity": {
        "family": "quintic",
        "coef": "1.0",
        "power": "5",
        "mask_lo": "0.0",
        "mask_hi": "1.0",
        "table": "",
        "c_f": "5.0",
    },
    "measures": {
        "n_lambda": "32",
        "lam_min": "0.05",
        "lam_max": "1.95",
        "n_t": "2000",
        "n_r": "2000",
        "rtol": "1e-3",
        "jump_tol": "1e-4",
        "identity_rtol": "1e-6",
    },
    "weight": {
        "xi_max": "100.0",
        "xi_step": "0.01",
        "slack": "1e-6",
        "integral_tol": "1e-8",
        "n_random": "10000",
        "tau_lo": "-1.0",
        "tau_hi": "10.0",
        "ulp": "10",
        "regularization": "1e-10",
        "corrupt_w_hat": "false",
    },
    "sweep": {
        "tau_min": "-3.0",
        "tau_max": "3.0",
        "tau_step": "0.05",
        "epsilon": "0.05",
        "t0": "0.0",
        "x0": "0.0, 0.0, 0.0",
        "mode": "born_oracle",
        "pde_budget": "16",
        "pde_dr": "0.02",
        "pde_horizon": "16.0",
        "regularization": "1e-10",
        "pad_factor": "4",
        "window": "edge-cosine",
        "trusted_fraction": "0.8",
        "u_min": "0.2",
        "u_max": "2.0",
        "u_step": "0.01",
        "tolerance": "0.05",
    },
    "scaling": {
        "epsilons": "0.2, 0.1, 0.05",
        "alpha": "1.0",
        "pde_dr": "0.02",
        "pde_horizon": "16.0",
        "min_slope": "10.0",
        "time_budget": "600.0",
    },
    "localize": {
        "centers": "0.0; 3.0; 1.0",
        "epsilons": "0.4, 0.2, 0.1",
        "alpha": "1.0",
        "recover_epsilon": "1e-3",
        "tolerance": "0.05",
    },
}


@dataclass(frozen=True)
class RunConfig:
    """Resolved configuration: every section and key, values as strings."""

    values: dict

    # loading -----------------------------------------------------------------

    @classmethod
    def load(cls, path: str | os.PathLike | None = None, overrides: dict | None = None) -> "RunConfig":
        merged = {sec: dict(keys) for sec, keys in DEFAULTS.items()}
        if path is not None:
            cp = configparser.ConfigParser(interpolation=None)
            try:
                with open(path, encoding="utf-8") as fh:
                    cp.read_file(fh)
            except OSError as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from exc
            except configparser.Error as exc:
                raise ConfigError(f"malformed config {path}: {exc}") from exc
            for sec in cp.sections():
                for key, val in cp.items(sec):
                    cls._set(merged, sec, key, val)
        for dotted, val in (overrides or {}).items():
            sec, _, key = dotted.partition(".")
            cls._set(merged, sec, key, str(val))
        cfg = cls(merged)
        cfg.validate()
        return cfg

    @staticmethod
    def _set(merged, sec, key, val):
        if sec not in DEFAULTS:
            raise ConfigError(f"unknown section [{sec}]")
        if key not in DEFAULTS[sec]:
            raise ConfigError(f"unknown key '{key}' in [{sec}]")
        merged[sec][key] = val.strip()

    # typed access ----------------------------------------------------------

    def get(self, sec: str, key: str) -> str:
        return self.values[sec][key]

    def getfloat(self, sec: str, key: str) -> float:
        try:
            return float(self.get(sec, key))
        except ValueError as exc:
            raise ConfigError(f"[{sec}] {key} must be a number, got {self.get(sec, key)!r}") from exc

    def getint(self, sec: str, key: str) -> int:
        try:
            return int(self.get(sec, key))
        except ValueError as exc:
            raise ConfigError(f"[{sec}] {key} must be an integer, got {self.get(sec, key)!r}") from exc

    def getbool(self, sec: str, key: str) -> bool:
        v = self.get(sec, key).lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"[{sec}] {key} must be a boolean, got {v!r}")

    def floats(self, sec: str, key: str, sep: str = ",") -> list[float]:
        try:
            return [float(x) for x in self.get(sec, key).split(sep) if x.strip()]
        except ValueError as exc:
            raise ConfigError(f"[{sec}] {key} must be a list of numbers") from exc

    def centers(self) -> list[tuple]:
        out = []
        for item in self.get("localize", "centers").split(";"):
            if not item.strip():
                continue
            try:
                c = [float(x) for x in item.split(",")]
            except ValueError as exc:
                raise ConfigError(f"bad center {item!r}") from exc
            if len(c) == 1:
                c = [c[0], 0.0, 0.0]
            if len(c) != 3:
                raise ConfigError(f"center {item!r} needs 1 or 3 coordinates")
            out.append(tuple(c))
        return out

    @property
    def workers(self) -> int:
        w = self.getint("run", "workers")
        return w if w > 0 else (os.cpu_count() or 1)

    @property
    def seed(self) -> int:
        return self.getint("run", "seed")

    @property
    def out_dir(self) -> Path:
        return Path(self.get("run", "out"))

    # validation --------------------------------------------------------------

    _POSITIVE = [
        ("measures", "rtol"), ("measures", "jump_tol"), ("measures", "identity_rtol"),
        ("weight", "xi_step"), ("weight", "xi_max"), ("weight", "slack"), ("weight", "integral_tol"),
        ("weight", "ulp"), ("sweep", "tau_step"), ("sweep", "epsilon"), ("sweep", "tolerance"),
        ("sweep", "pde_dr"), ("sweep", "pde_horizon"), ("sweep", "u_step"),
        ("scaling", "alpha"), ("scaling", "pde_dr"), ("scaling", "pde_horizon"),
        ("localize", "alpha"), ("localize", "recover_epsilon"), ("localize", "tolerance"),
    ]

    def validate(self):
        for sec, key in self._POSITIVE:
            if not self.getfloat(sec, key) > 0:
                raise ConfigError(f"[{sec}] {key} must be positive")
        for sec, key in [("measures", "n_lambda"), ("measures", "n_t"), ("measures", "n_r"),
                         ("weight", "n_random")]:
            if self.getint(sec, key) < 1:
                raise ConfigError(f"[{sec}] {key} must be >= 1")
        if self.getfloat("measures", "lam_min") <= 0 or self.getfloat("measures", "lam_max") < self.getfloat("measures", "lam_min"):
            raise ConfigError("[measures] need 0 < lam_min <= lam_max")
        if self.getfloat("weight", "regularization") < 0 or self.getfloat("sweep", "regularization") < 0:
            raise ConfigError("regularization must be >= 0")
        if any(e <= 0 for e in self.floats("scaling", "epsilons") + self.floats("localize", "epsilons")):
            raise ConfigError("epsilon lists must be positive")
        self.getint("run", "seed")
        self.getint("run", "workers")
        self.getbool("weight", "corrupt_w_hat")

    # identity ----------------------------------------------------------------

    def canonical(self) -> str:
        vals = {s: dict(sorted(k.items())) for s, k in sorted(self.values.items())}
        vals["run"] = {k: v for k, v in vals["run"].items() if k not in ("out", "workers")}
        return json.dumps(vals, sort_keys=True)

    @property
    def hash(self) -> str:
        """Digest of everything that affects results (not the output path or worker count)."""
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]

    def header(self, section: str, extra: dict | None = None) -> dict:
        h = {"config_hash": self.hash}
        h.update({f"{section}.{k}": v for k, v in sorted(self.values[section].items())})
        h.update(extra or {})
        return h

    def to_ini(self) -> str:
        lines = []
        for sec, keys in self.values.items():
            lines.append(f"[{sec}]")
            lines += [f"{k} = {v}" for k, v in keys.items()]
            lines.append("")
        return "\n".join(lines)

    # domain objects ---------------------------------------------------------------

    def nonlinearity(self) -> NonlinearitySpec:
        fam = self.get("nonlinearity", "family")
        coef = self.getfloat("nonlinearity", "coef")
        try:
            if fam == "quintic":
                return NonlinearitySpec.quintic(coef)
            if fam == "zero":
                return NonlinearitySpec.zero()
            if fam == "masked_quintic":
                return NonlinearitySpec.masked_quintic(
                    self.getfloat("nonlinearity", "mask_hi"), self.getfloat("nonlinearity", "mask_lo"), coef)
            if fam == "rational_quintic":
                return NonlinearitySpec.rational_quintic(coef)
            if fam == "power":
                return NonlinearitySpec.power_law(self.getint("nonlinearity", "power"), coef)
            if fam == "tabulated":
                path = self.get("nonlinearity", "table")
                if not path:
                    raise ConfigError("tabulated nonlinearity needs [nonlinearity] table = <csv path>")
                u, f = _read_table(path)
                return NonlinearitySpec.tabulated(u, coef * f, self.getfloat("nonlinearity", "c_f"))
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        raise ConfigError(f"unknown nonlinearity family {fam!r}")


def _read_table(path: str):
    try:
        rows = [r for r in csv.reader(open(path, encoding="utf-8")) if r and not r[0].startswith("#")]
        data = [(float(a), float(b)) for a, b, *_ in rows if _isnum(a)]
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read table {path}: {exc}") from exc
    arr = np.asarray(data)
    if arr.ndim != 2 or arr.shape[0] < 3:
        raise ConfigError(f"table {path} needs at least 3 rows of (u, F)")
    return arr[:, 0], arr[:, 1]


def _isnum(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


# --- writers -----------------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return "" if x is None else str(x)


def write_csv(path: Path, header: dict, columns: list[str], rows) -> Path:
    """CSV with a '# key: value' header block, then a column row, then data."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for k, v in header.items():
            fh.write(f"# {k}: {v}\n")
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(columns)
        for row in rows:
            wr.writerow([_fmt(x) for x in row])
    return path


def write_json(path: Path, header: dict, payload: dict) -> Path:
    from .weight_deconv import _jsonable

    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"header": header, "result": _jsonable(payload)}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")
    return path
