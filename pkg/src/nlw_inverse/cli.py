"""Command-line entry point: verification runs, recovery sweeps and studies.

Exit codes: 0 all checks passed, 1 a tolerance was not met, 2 configuration error.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import replace

import numpy as np

from . import born_pipeline as bp
from . import closed_forms as cf
from . import weight_deconv as wd
from .nonlinearity import check_admissible
from .runconfig import ConfigError, RunConfig, write_csv, write_json

EXIT_OK, EXIT_TOL, EXIT_CONFIG = 0, 1, 2


def _line(ok: bool, text: str):
    print(f"[{'PASS' if ok else 'FAIL'}] {text}")


def _config_call(fn, *args, **kwargs):
    # objects built from config values: ValueError means a bad configuration
    try:
        return fn(*args, **kwargs)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# --- verify-measures -----------------------------------------------------------------


def cmd_verify_measures(cfg: RunConfig) -> int:
    lo, hi = cfg.getfloat("measures", "lam_min"), cfg.getfloat("measures", "lam_max")
    n = cfg.getint("measures", "n_lambda")
    n_t, n_r = cfg.getint("measures", "n_t"), cfg.getint("measures", "n_r")
    rtol = cfg.getfloat("measures", "rtol")
    lams = np.linspace(lo, hi, n)
    rows = []
    for lam in lams:
        closed = float(cf.m_closed(lam))
        orc = cf.m_oracle(lam, n_t, n_r)
        err = abs(closed - orc.value) / abs(closed) if closed != 0 else abs(orc.value)
        rows.append((float(lam), closed, orc.value, orc.error_estimate, err))
    worst = max(rows, key=lambda r: r[4])
    ok_oracle = worst[4] < rtol

    id_tol = cfg.getfloat("measures", "identity_rtol")
    id_rows = []
    for lam in (0.1, 0.5, 1.0, 1.5, 1.9):
        parts = cf.m_region_quadrature(lam)
        closed = float(cf.m_closed(lam))
        total = float(sum(parts))
        id_rows.append((lam, *parts, total, closed, abs(total - closed) / closed))
    id_worst = max(id_rows, key=lambda r: r[-1])
    ok_id = id_worst[-1] < id_tol

    jump_tol = cfg.getfloat("measures", "jump_tol")
    plateau = cf.plateau_measure()
    left_limit = float(cf.m_closed(2.0 - 1e-9))
    jump_err = max(abs(plateau - np.pi / 24), abs(left_limit - plateau))
    ok_jump = jump_err < jump_tol

    out = cfg.out_dir
    head = cfg.header("measures")
    write_csv(out / "measures.csv", head, ["lambda", "m_closed", "m_oracle", "oracle_err_est", "rel_err"], rows)
    write_csv(out / "measures_identity.csv", head,
              ["lambda", "int1", "int2", "int3", "sum", "m_closed", "rel_err"], id_rows)
    summary = {
        "worst_oracle": {"lambda": worst[0], "rel_err": worst[4]},
        "worst_identity": {"lambda": id_worst[0], "rel_err": id_worst[-1]},
        "plateau": plateau, "pi_over_24": np.pi / 24, "left_limit": left_limit,
        "passed": bool(ok_oracle and ok_id and ok_jump),
    }
    write_json(out / "measures_summary.json", head, summary)
    _line(ok_oracle, f"m_closed vs oracle on {n} points: worst rel err {worst[4]:.3e} at lambda={worst[0]:.4g} (tol {rtol:g})")
    _line(ok_id, f"regional integrals sum to m_closed: worst rel err {id_worst[-1]:.3e} (tol {id_tol:g})")
    _line(ok_jump, f"plateau measure {plateau:.10f} vs pi/24, left limit {left_limit:.10f} (tol {jump_tol:g})")
    return EXIT_OK if summary["passed"] else EXIT_TOL


# --- verify-weight -------------------------------------------------------------------


def cmd_verify_weight(cfg: RunConfig) -> int:
    xi_max, step = cfg.getfloat("weight", "xi_max"), cfg.getfloat("weight", "xi_step")
    slack = cfg.getfloat("weight", "slack")
    n_half = int(round(xi_max / step))
    xi_pos = step * np.arange(n_half + 1)
    w_pos = np.abs(wd.w_hat_grid(xi_pos))
    xs = np.concatenate([-xi_pos[:0:-1], xi_pos])
    absw = np.concatenate([w_pos[:0:-1], w_pos])  # |w_hat(-xi)| = |w_hat(xi)|, w real
    if cfg.getbool("weight", "corrupt_w_hat"):
        absw = absw.copy()
        absw[np.argmin(np.abs(xs - 1.0))] = 0.0
    bound = wd.w_hat_lower_bound(xs)
    margin = absw - bound
    k = int(np.argmin(margin))
    ok_cert = bool(margin[k] >= -slack)
    ok_pos = bool(np.min(bound) > 0)

    w0 = wd.w_hat(0.0).real
    itol = cfg.getfloat("weight", "integral_tol")
    ok_int = abs(w0 - wd.W_INTEGRAL) <= itol
    ok_w00 = complex(wd.w0_hat(0.0)) == 1.0 / 6.0

    rng = np.random.default_rng(cfg.seed)
    tau = rng.uniform(cfg.getfloat("weight", "tau_lo"), cfg.getfloat("weight", "tau_hi"),
                      cfg.getint("weight", "n_random"))
    a, b = wd.eval_w(tau), wd.w_from_m(tau)
    ulps = np.abs(a - b) / np.spacing(np.maximum(np.abs(a), np.finfo(float).tiny))
    ulps = np.where(a == b, 0.0, ulps)
    ok_ulp = float(np.max(ulps)) <= cfg.getfloat("weight", "ulp")

    probes = (0.5, 7.0, 63.3)
    cross = max(abs(wd.w_hat(x) - wd.w_hat_grid([x])[0]) for x in probes)
    ok_cross = cross < 1e-9

    # deconvolution round trip of a constant H at the configured regularization
    mu = cfg.getfloat("weight", "regularization")
    h_step = 0.05
    tau_full = np.arange(-15.0, 3.0 + 1e-9, h_step)
    H = wd.SampledFunction.from_grid(tau_full, np.full(tau_full.size, 6.0))
    g = wd.convolve(H, wd.w_cell_weights(h_step), "valid")
    rec = wd.deconvolve(g, wd.DeconvConfig(regularization=mu)).interior(0.5)
    dec_err = float(np.max(np.abs(rec.values - 6.0)) / 6.0) if np.all(np.isfinite(rec.values)) else np.inf
    ok_dec = dec_err < 1e-3

    out = cfg.out_dir
    head = cfg.header("weight")
    write_csv(out / "weight_certificate.csv", head, ["xi", "abs_w_hat", "bound", "margin"],
              zip(xs, absw, bound, margin))
    summary = {
        "min_margin": float(margin[k]), "min_margin_xi": float(xs[k]),
        "min_bound": float(np.min(bound)), "w_hat_0": w0, "w_integral": wd.W_INTEGRAL,
        "w0_hat_0": 1.0 / 6.0, "max_ulp": float(np.max(ulps)), "route_gap": float(cross),
        "deconv_rel_err": dec_err,
    }
    passed = all([ok_cert, ok_pos, ok_int, ok_w00, ok_ulp, ok_cross, ok_dec])
    summary["passed"] = passed
    write_json(out / "weight_summary.json", head, summary)
    _line(ok_cert, f"|w_hat| >= bound - {slack:g} on |xi| <= {xi_max:g}: min margin {margin[k]:.4e} at xi={xs[k]:.2f}")
    _line(ok_pos, f"bound strictly positive: min {np.min(bound):.4e}")
    _line(ok_int, f"w_hat(0) = {w0:.14f} vs 40 ln 2 - 55/2 (tol {itol:g})")
    _line(ok_w00, "w0_hat(0) = 1/6")
    _line(ok_ulp, f"eval_w vs w_from_m: max {np.max(ulps):.0f} ulp")
    _line(ok_cross, f"adaptive and grid transforms agree to {cross:.2e}")
    _line(ok_dec, f"deconvolution round trip at mu={mu:g}: rel err {dec_err:.2e}")
    return EXIT_OK if passed else EXIT_TOL


# --- recover ----------------------------------------------------------------------------


def _plan(cfg: RunConfig) -> bp.SweepPlan:
    sec = "sweep"
    deconv = _config_call(
        wd.DeconvConfig,
        regularization=cfg.getfloat(sec, "regularization"),
        pad_factor=cfg.getint(sec, "pad_factor"),
        window=cfg.get(sec, "window"),
        trusted_fraction=cfg.getfloat(sec, "trusted_fraction"),
    )
    pde = _config_call(bp.PdeSettings, dr=cfg.getfloat(sec, "pde_dr"),
                       horizon=cfg.getfloat(sec, "pde_horizon"))
    x0 = cfg.floats(sec, "x0")
    if len(x0) == 1:
        x0 = [x0[0], 0.0, 0.0]
    if len(x0) != 3:
        raise ConfigError("[sweep] x0 needs 1 or 3 coordinates")
    return _config_call(
        bp.SweepPlan,
        tau_min=cfg.getfloat(sec, "tau_min"), tau_max=cfg.getfloat(sec, "tau_max"),
        tau_step=cfg.getfloat(sec, "tau_step"), epsilon=cfg.getfloat(sec, "epsilon"),
        t0=cfg.getfloat(sec, "t0"), x0=tuple(x0), mode=cfg.get(sec, "mode"),
        pde_budget=cfg.getint(sec, "pde_budget"), pde=pde, deconv=deconv,
        u_min=cfg.getfloat(sec, "u_min"), u_max=cfg.getfloat(sec, "u_max"),
        u_step=cfg.getfloat(sec, "u_step"),
    )


def _localize(cfg: RunConfig, F, plan: bp.SweepPlan, tag: str) -> bp.LocalizationTable:
    rec_plan = replace(plan, epsilon=cfg.getfloat("localize", "recover_epsilon"), mode="born_oracle")
    table = bp.localization_experiment(
        F, cfg.centers(), cfg.floats("localize", "epsilons"), cfg.getfloat("localize", "alpha"),
        recover=True, recover_plan=rec_plan, workers=cfg.workers,
        tolerance=cfg.getfloat("localize", "tolerance"),
    )
    out = cfg.out_dir
    head = cfg.header("localize", {"nonlinearity": F.to_dict()})
    write_csv(out / f"{tag}.csv", head, ["x0_norm", "epsilon", "value", "limit", "deviation"],
              [(r.x0_norm, r.epsilon, r.value, r.limit, r.deviation) for r in table.rows])
    write_csv(out / f"{tag}_centers.csv", head,
              ["x0_norm", "kind", "limit", "monotone", "rate", "recovery_error"],
              [(c.x0_norm, c.kind, c.limit, c.monotone, c.rate, c.recovery_error) for c in table.centers])
    write_json(out / f"{tag}.json", head, table.to_dict())
    for c in table.centers:
        if c.kind == "boundary":
            print(f"[SKIP] center |x0|={c.x0_norm:g} lies on the mask boundary (not determinable)")
            continue
        ok = bool(c.monotone) and (c.recovery_error is None or c.recovery_error < table.tolerance)
        rate = "n/a" if c.rate is None else f"{c.rate:.2f}"
        rec = "n/a" if c.recovery_error is None else f"{c.recovery_error:.2e}"
        _line(ok, f"{c.kind} center |x0|={c.x0_norm:g}: limit {c.limit:.6f}, monotone={c.monotone}, "
                  f"rate {rate}, recovery err {rec}")
    return table


def cmd_recover(cfg: RunConfig) -> int:
    F = cfg.nonlinearity()
    plan = _plan(cfg)
    tol = cfg.getfloat("sweep", "tolerance")
    adm = check_admissible(F, seed=cfg.seed)
    rep = bp.run_sweep(F, plan, cfg.workers)
    u = plan.u_grid
    scale = np.abs(F.core(u))
    if np.all(scale == 0):
        err = float(np.max(np.abs(rep.f_estimate.values)))
        ok = err == 0.0
        desc = f"max |F_recovered| = {err:.3e} for F = 0"
    else:
        err = rep.max_relative_error(scale)
        ok = err < tol
        desc = f"max |F_rec - F_true| / |F| = {err:.3e} on u in [{u[0]:g}, {u[-1]:g}] (tol {tol:g})"
    out = cfg.out_dir
    head = cfg.header("sweep", {"nonlinearity": F.to_dict()})
    doc = rep.to_dict()
    doc["admissibility"] = {c.name: {"passed": c.passed, "worst": c.worst} for c in adm.conditions}
    doc["max_error"] = err
    doc["passed"] = bool(ok)
    write_json(out / "recover_report.json", head, doc)
    hw = rep.hw_samples
    write_csv(out / "recover_hw.csv", head, ["tau0", "hw", "error_bar", "mode"],
              [(t, v, e, plan.mode) for t, v, e in zip(hw.tau, hw.values, hw.meta["error_bars"])])
    write_csv(out / "recover_h.csv", head, ["tau", "H"], zip(rep.h_estimate.tau, rep.h_estimate.values))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(rep.f_true.values != 0, rep.f_estimate.values / rep.f_true.values, np.nan)
    write_csv(out / "recover_f.csv", head, ["u", "F_true", "F_recovered", "ratio"],
              [(a, b, c, None if np.isnan(d) else d)
               for a, b, c, d in zip(u, rep.f_true.values, rep.f_estimate.values, ratio)])
    if not adm.passed:
        print("[WARN] nonlinearity fails admissibility: "
              + ", ".join(c.name for c in adm.conditions if not c.passed))
    _line(ok, desc)
    code = EXIT_OK if ok else EXIT_TOL
    if F.mask is not None:
        table = _localize(cfg, F, plan, "recover_localization")
        if not table.passed:
            code = EXIT_TOL
    return code


# --- scaling-study --------------------------------------------------------------------


def cmd_scaling_study(cfg: RunConfig) -> int:
    F = cfg.nonlinearity()
    eps = cfg.floats("scaling", "epsilons")
    if len(set(eps)) < 3:
        raise ConfigError("[scaling] epsilons needs at least 3 distinct values for a slope fit")
    settings = _config_call(bp.PdeSettings, dr=cfg.getfloat("scaling", "pde_dr"),
                            horizon=cfg.getfloat("scaling", "pde_horizon"), richardson=False)
    min_slope = cfg.getfloat("scaling", "min_slope")
    budget = cfg.getfloat("scaling", "time_budget")
    rep = _config_call(bp.born_scaling_study, F, eps, cfg.getfloat("scaling", "alpha"), settings,
                       time_budget=budget if budget > 0 else None)
    out = cfg.out_dir
    head = cfg.header("scaling")
    rows = []
    for e, pf, pg, pb, d in zip(rep.epsilons, rep.pairing_full, rep.pairing_born_grid,
                                rep.pairing_born, rep.differences):
        rows.append((e, pf, pg, pb, d, np.log(e), np.log(d) if d > 0 else None))
    write_csv(out / "scaling.csv", head,
              ["epsilon", "pairing_full", "pairing_born_grid", "pairing_born", "difference",
               "log_epsilon", "log_difference"], rows)
    write_json(out / "scaling.json", head, rep.to_dict())
    if rep.partial:
        _line(False, f"time budget {budget:g}s exceeded after {len(rep.epsilons)} eps values; partial results written")
        return EXIT_TOL
    if all(d == 0 for d in rep.differences):
        print("[INFO] differences vanish identically: slope undefined (floor-limited)")
        return EXIT_OK
    if rep.slope is not None and not rep.floor_limited:
        ok = rep.slope >= min_slope
        _line(ok, f"log-log slope of |full - born| = {rep.slope:.3f} (min {min_slope:g}); "
                  f"born pairing slope {rep.slope_born:.3f}")
    else:
        pair = rep.largest_pair_slope
        ok = pair is not None and pair >= min_slope
        _line(ok, f"floor-limited below {rep.floor:.2e}; largest-eps pair slope "
                  f"{'n/a' if pair is None else f'{pair:.3f}'} (min {min_slope:g})")
    return EXIT_OK if ok else EXIT_TOL


# --- localize ---------------------------------------------------------------------------


def cmd_localize(cfg: RunConfig) -> int:
    F = cfg.nonlinearity()
    if F.family != "masked_quintic":
        raise ConfigError(
            f"localize needs [nonlinearity] family = masked_quintic, got {F.family!r} "
            "(see configs/localize.ini)")
    table = _localize(cfg, F, _plan(cfg), "localization")
    return EXIT_OK if table.passed else EXIT_TOL


COMMANDS = {
    "verify-measures": cmd_verify_measures,
    "verify-weight": cmd_verify_weight,
    "recover": cmd_recover,
    "scaling-study": cmd_scaling_study,
    "localize": cmd_localize,
}


HELP = {
    "verify-measures": "distribution function m: closed form vs brute-force oracle",
    "verify-weight": "Fourier certificate and identities for the kernel w",
    "recover": "oracle or full-PDE sweep, deconvolution and recovery of F",
    "scaling-study": "log-log slope of the Born approximation error",
    "localize": "pointwise convergence for a masked nonlinearity",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nlw-inverse",
        description="Recover a semilinear wave nonlinearity from small-data scattering measurements.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=HELP[name])
        p.add_argument("--config", help="INI configuration file")
        p.add_argument("--out", help="output directory (overrides [run] out)")
        p.add_argument("--workers", type=int, help="worker processes (0 = all cores)")
        p.add_argument("--seed", type=int, help="seed for randomized checks")
        p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                       help="override a configuration value (repeatable)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {}
    for item in args.set:
        key, sep, val = item.partition("=")
        if not sep or "." not in key:
            print(f"error: --set expects SECTION.KEY=VALUE, got {item!r}", file=sys.stderr)
            return EXIT_CONFIG
        overrides[key.strip()] = val
    for flag, key in (("out", "run.out"), ("workers", "run.workers"), ("seed", "run.seed")):
        if getattr(args, flag) is not None:
            overrides[key] = str(getattr(args, flag))
    try:
        cfg = RunConfig.load(args.config, overrides)
        start = time.monotonic()
        code = COMMANDS[args.command](cfg)
    except (ConfigError, wd.ConfigurationError, wd.WindowTooSmallError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"{args.command}: exit {code} in {time.monotonic() - start:.1f}s (config {cfg.hash})")
    return code


if __name__ == "__main__":
    sys.exit(main())
