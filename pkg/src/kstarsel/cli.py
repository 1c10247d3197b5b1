"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 failed ``validate --assert`` check.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .errors import ConfigError
from .rate_approx import approx_rate_lus, approx_rate_rus, approx_rate_special
from .rmt import deterministic_equivalents, validate_large_system
from .runconfig import RunConfig, load_run_config
from .selection import solve_kstar
from .sim import SCHEMES, THREADS_ENV, ergodic_rate, fairness, sweep
from .tables import ResultTable

log = logging.getLogger("kstarsel")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_ASSERT = 0, 2, 3, 4
RATE = "bit/s/Hz"


def _base_meta(run: RunConfig, command: str) -> dict:
    return {"command": command, "fingerprint": run.system.fingerprint(), "seed": run.system.seed}


def cmd_kstar(run: RunConfig, args):
    cfg = run.system
    rus = solve_kstar(cfg, "RUS")
    lus = solve_kstar(cfg, "LUS")
    table = ResultTable(["K", "rate_rus_approx", "rate_lus_approx"],
                        {"K": "users", "rate_rus_approx": RATE, "rate_lus_approx": RATE},
                        meta=_base_meta(run, "kstar"))
    for K in sorted(set(rus.curve) | set(lus.curve)):
        table.add(K=K, rate_rus_approx=rus.curve.get(K, math.nan),
                  rate_lus_approx=lus.curve.get(K, math.nan))
    summary = {"k_star_rus": rus.k_star, "k_star_lus": lus.k_star,
               "rate_rus_at_k_star": rus.best_rate, "rate_lus_at_k_star": lus.best_rate}
    return table, summary


def cmd_approx(run: RunConfig, args):
    cfg = run.system
    special = cfg.est_error == 0.0 and cfg.corr_coef == 0.0
    cols = ["K", "phi", "psi", "coeff_A", "coeff_B", "rate_rus_approx", "rate_lus_approx",
            "rate_rus_special", "rate_lus_special"]
    units = {"K": "users", "phi": "1", "psi": "1", "coeff_A": "m^-alpha", "coeff_B": "1",
             "rate_rus_approx": RATE, "rate_lus_approx": RATE, "rate_rus_special": RATE,
             "rate_lus_special": RATE}
    table = ResultTable(cols, units, meta=_base_meta(run, "approx"))
    k_max = min(cfg.num_antennas - 1, cfg.coherence_symbols - 1)
    for K in range(1, k_max + 1):
        de = deterministic_equivalents(cfg, K)
        table.add(K=K, phi=de.phi, psi=de.psi, coeff_A=de.coeff_A, coeff_B=de.coeff_B,
                  rate_rus_approx=approx_rate_rus(cfg, K).value,
                  rate_lus_approx=approx_rate_lus(cfg, K).value if K <= cfg.num_candidates else math.nan,
                  rate_rus_special=approx_rate_special(cfg, K, "RUS").value if special else math.nan,
                  rate_lus_special=approx_rate_special(cfg, K, "LUS").value if special else math.nan)
    return table, {"special_case": special}


def cmd_simulate(run: RunConfig, args):
    cfg = run.system
    schemes = args.scheme or run.schemes
    cols = ["scheme", "K", "mean_rate", "stderr", "ci95", "discarded"]
    units = {"scheme": "-", "K": "users", "mean_rate": RATE, "stderr": RATE, "ci95": RATE,
             "discarded": "trials"}
    if "sus" in schemes:
        cols.append("alpha_sus")
        units["alpha_sus"] = "1"
    table = ResultTable(cols, units, meta={**_base_meta(run, "simulate"), "trials": run.trials or cfg.trials})
    summary = {}
    for scheme in schemes:
        K = run.K if scheme in ("rus", "lus") else None
        rep = ergodic_rate(cfg, scheme, K=K, trials=run.trials, threads=run.threads,
                           sus_alpha=run.alpha, tune_trials=run.tune_trials,
                           alpha_grid=run.alpha_grid)
        table.add(scheme=scheme, K=rep.K, mean_rate=rep.mean, stderr=rep.stderr, ci95=rep.ci95,
                  discarded=rep.discarded, alpha_sus=rep.alpha_sus if rep.alpha_sus is not None else math.nan)
        summary[scheme] = {"mean_rate": rep.mean, "ci95": rep.ci95, "warning": rep.warning}
    return table, summary


def cmd_sweep(run: RunConfig, args):
    rows = sweep(run.system, run.axis, run.values, args.scheme or run.schemes, trials=run.trials,
                 threads=run.threads, sus_alpha=run.alpha, tune_trials=run.tune_trials,
                 alpha_grid=run.alpha_grid)
    cols = ["axis", "value", "scheme", "K", "k_star", "approx_rate", "mean_rate", "stderr", "ci95",
            "discarded", "alpha_sus", "error"]
    units = dict.fromkeys(cols, "-")
    units.update(K="users", k_star="users", approx_rate=RATE, mean_rate=RATE, stderr=RATE,
                 ci95=RATE, discarded="trials", alpha_sus="1")
    units["value"] = {"power_dbm": "dBm", "candidates_N": "users", "active_K": "users",
                      "rho": "1", "delta": "1"}[run.axis]
    table = ResultTable(cols, units, meta={**_base_meta(run, "sweep"), "trials": run.trials or run.system.trials})
    for row in rows:
        table.add(**row)
    errors = [r for r in rows if r["error"]]
    return table, {"points": len(rows), "errors": len(errors)}


def cmd_fairness(run: RunConfig, args):
    cfg = run.system
    cols = ["scheme", "jfi_mean", "jfi_std", "jfi_realized_mean", "k_star", "K", "N", "windows",
            "slots_per_window"]
    units = {"scheme": "-", "jfi_mean": "1", "jfi_std": "1", "jfi_realized_mean": "1",
             "k_star": "users", "K": "users", "N": "users", "windows": "count",
             "slots_per_window": "slots"}
    meta = {**_base_meta(run, "fairness"),
            "jfi": "mean over windows of per-window Jain index of omega_n*R_n; "
                   "jfi_realized uses realized window-average rates"}
    table = ResultTable(cols, units, meta=meta)
    for scheme in args.scheme or run.schemes:
        K = run.K if scheme in ("rus", "lus") else None
        rep = fairness(cfg, scheme, run.windows, run.slots_per_window, K=K, sus_alpha=run.alpha,
                       threads=run.threads, tune_trials=run.tune_trials, alpha_grid=run.alpha_grid)
        k_star = rep.K if scheme.startswith("kstar-") else math.nan
        table.add(scheme=scheme, jfi_mean=rep.jfi, jfi_std=rep.jfi_std,
                  jfi_realized_mean=rep.jfi_realized, k_star=k_star, K=rep.K,
                  N=cfg.num_candidates, windows=rep.windows, slots_per_window=rep.slots_per_window)
    return table, {}


def cmd_validate(run: RunConfig, args):
    cols = ["M", "K", "rel_err_gamma2", "rel_err_quadform", "gamma2_mean", "gamma2_limit",
            "quadform_mean", "quadform_limit"]
    units = {"M": "antennas", "K": "users", "rel_err_gamma2": "1", "rel_err_quadform": "1",
             "gamma2_mean": "mW", "gamma2_limit": "mW", "quadform_mean": "1", "quadform_limit": "1"}
    table = ResultTable(cols, units, meta={**_base_meta(run, "validate"), "trials": run.validate_trials})
    reports = []
    for M in run.antennas:
        cfg = run.system.replace(num_antennas=M, num_candidates=max(M, run.system.num_candidates))
        K = max(1, int(round(run.k_fraction * M)))
        rep = validate_large_system(cfg, K, run.validate_trials)
        reports.append(rep)
        table.add(M=M, K=K, rel_err_gamma2=rep.rel_err_gamma_sq, rel_err_quadform=rep.rel_err_quadform,
                  gamma2_mean=rep.gamma_sq_mean, gamma2_limit=rep.gamma_sq_limit,
                  quadform_mean=rep.quadform_mean, quadform_limit=rep.quadform_limit)
    errs = [r.rel_err_gamma_sq for r in reports]
    decreasing = all(b < a for a, b in zip(errs, errs[1:]))
    within = all(r.rel_err_gamma_sq <= 0.05 and r.rel_err_quadform <= 0.05 for r in reports[-1:])
    return table, {"gamma2_error_decreasing": decreasing, "within_5pct_at_largest_M": within,
                   "passed": decreasing and within}


COMMANDS = {
    "kstar": (cmd_kstar, "optimal K for K*-RUS and K*-LUS with the approximate rate curves"),
    "approx": (cmd_approx, "deterministic equivalents and rate approximations for every K"),
    "simulate": (cmd_simulate, "Monte Carlo ergodic sum rate per scheme"),
    "sweep": (cmd_sweep, "approximation and simulation over one parameter axis"),
    "fairness": (cmd_fairness, "Jain fairness index over coherence windows"),
    "validate": (cmd_validate, "Monte Carlo check of the large-system limits"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kstarsel", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"kstarsel {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, help="run configuration file (defaults: reference cell)")
        p.add_argument("--seed", type=int)
        p.add_argument("--trials", type=int)
        p.add_argument("--threads", type=int,
                       help=f"worker threads (default: ${THREADS_ENV} or 1); never changes results")
        p.add_argument("--out", type=Path, help="CSV output path; a JSON summary is written next to it")
        if name in ("simulate", "sweep", "fairness"):
            p.add_argument("--scheme", action="append", help="scheme name, repeatable")
        if name == "validate":
            p.add_argument("--assert", dest="check", action="store_true",
                           help="exit with status 4 if the convergence checks fail")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _apply_overrides(run: RunConfig, args) -> RunConfig:
    if args.seed is not None:
        run.system = run.system.replace(seed=args.seed)
    if args.trials is not None:
        if args.trials < 1:
            raise ConfigError("--trials must be >= 1")
        run.trials = args.trials
        run.validate_trials = args.trials
    if args.threads is not None:
        run.threads = args.threads
    if args.out is None and run.path:
        args.out = Path(run.path)
    if getattr(args, "scheme", None):
        args.scheme = [s.lower() for s in args.scheme]
        bad = [s for s in args.scheme if s not in SCHEMES]
        if bad:
            raise ConfigError(f"unknown schemes {bad}; expected some of {SCHEMES}")
    return run


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    fn = COMMANDS[args.command][0]
    try:
        run = load_run_config(args.config) if args.config else RunConfig()
        run = _apply_overrides(run, args)
        table, summary = fn(run, args)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ArithmeticError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    csv_text = table.to_csv()
    summary = {**summary, **table.meta,
               "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds")}
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(csv_text, encoding="utf-8")
        args.out.with_suffix(".json").write_text(json.dumps(summary, indent=2, default=str) + "\n",
                                                 encoding="utf-8")
    else:
        sys.stdout.write(csv_text)
        print(json.dumps(summary, default=str), file=sys.stderr)
    if args.command == "validate" and args.check and not summary["passed"]:
        print("validate: convergence checks failed", file=sys.stderr)
        return EXIT_ASSERT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
