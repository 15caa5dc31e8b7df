"""Command-line entry point.

Exit codes: 0 on success, 2 for configuration errors (bad flags, invalid
plans, infeasible bounds), 3 for data errors (unreadable or malformed
input, degenerate fits).
"""

import argparse
import csv
import json
import os
import sys
import warnings
from dataclasses import replace

import numpy as np

from . import kernels
from .baselines import FITTERS, BaselineParams, fit_restarts
from .clustering import INIT_KINDS, KbmomParams, block_kmom_fit, kbmom_fit
from .datagen import PRESET_NAMES, generate, preset
from .estimators import (BOOTSTRAP, BlockPlan, BreakdownBoundWarning, bmom, mc_breakdown,
                         plan_bounds)
from .exceptions import (CSVParseError, DegenerateIterationError, InfeasibleError,
                         InvalidPlanError, UndefinedMetricError)
from .harness import (METRICS, config_from_dict, grid_configs, load_csv, run_experiment,
                      write_experiment)
from .metrics import distortion_clean
from .tuning import auto_grid, blocksize_sweep, write_sweep_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3

CLUSTER_METHODS = ("kbmom", "block-kmom") + tuple(FITTERS)


def fmt(x):
    """Six significant digits."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.6g}"


class ConfigError(Exception):
    pass


def _write_rows(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


# -- cluster ---------------------------------------------------------------

def cmd_cluster(args):
    ds = load_csv(args.input, has_header=not args.no_header)
    K = args.k
    if args.method in ("kbmom", "block-kmom"):
        if args.block_size is None:
            raise ConfigError("--block-size is required for kbmom and block-kmom")
        params = KbmomParams(K=K, B=args.blocks, n_B=args.block_size, epsilon=args.epsilon,
                             max_iter=args.max_iter or 50, init_kind=args.init,
                             n_seedings=args.seedings)
        fit = kbmom_fit if args.method == "kbmom" else block_kmom_fit
        res = fit(ds, params, args.seed)
    else:
        alpha = args.alpha if args.method == "trimmed-kmeans" else 0.0
        params = BaselineParams(K=K, max_iter=args.max_iter or 300, trim_alpha=alpha,
                                n_init=args.seedings)
        res = fit_restarts(args.method, ds, params, args.seed)
    out = args.output
    os.makedirs(out, exist_ok=True)
    _write_rows(os.path.join(out, "labels.csv"), ("row_index", "label"),
                enumerate(res.labels.tolist()))
    p = ds.p
    _write_rows(os.path.join(out, "centers.csv"),
                ("cluster",) + tuple(f"x{j}" for j in range(p)) + ("within_variance",),
                ([k] + [repr(float(v)) for v in c] + [repr(float(w))]
                 for k, (c, w) in enumerate(zip(res.centers, res.centroids.within_variances))))
    risk = res.risk_trace[-1] if res.risk_trace else float("nan")
    print(f"method {args.method}")
    print(f"final risk {fmt(risk)}")
    print(f"distortion {fmt(distortion_clean(ds, res.labels, res.centers))}")
    print(f"iterations {res.iterations}")
    print(f"converged {res.converged}")
    return EXIT_OK


# -- tune ------------------------------------------------------------------

def _parse_grid(text, n, K):
    if text.startswith("auto"):
        step = 5
        if ":" in text:
            try:
                step = int(text.split(":", 1)[1])
            except ValueError:
                raise ConfigError(f"bad grid {text!r}; use auto, auto:STEP or a comma list") from None
        return auto_grid(n, K, step)
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"bad grid {text!r}; use auto, auto:STEP or a comma list") from None


def cmd_tune(args):
    if (args.input is None) == (args.preset is None):
        raise ConfigError("give exactly one of --input and --preset")
    if args.preset is not None:
        cfg = preset(args.preset)
        ds = generate(cfg, args.seed)
        K = cfg.mixture.K if args.k is None else args.k
    else:
        ds = load_csv(args.input, has_header=not args.no_header)
        if args.k is None:
            raise ConfigError("--k is required with --input")
        K = args.k
    grid = _parse_grid(args.grid, ds.n, K)
    if len(set(grid)) < 3:
        raise ConfigError("breakpoint detection needs at least 3 grid values")
    res = blocksize_sweep(ds, K, args.blocks, grid, args.seed, threshold=args.threshold)
    if args.output:
        write_sweep_csv(res, args.output)
    for pt in res.points:
        print(f"n_B {pt.n_B:4d}  median_risk {fmt(pt.median_risk):>10}  "
              f"outliers {pt.outliers_in_median_block}  clean_ari {fmt(pt.clean_ari)}")
    if not res.breakpoint_found:
        print("no breakpoint above threshold; falling back to the largest grid value")
    print(f"selected_n_B {res.selected_n_B}")
    return EXIT_OK


# -- breakdown -------------------------------------------------------------

def cmd_breakdown(args):
    if args.trials < 1:
        raise ConfigError("--trials must be >= 1")
    if not 0 <= args.m < args.n:
        raise ConfigError("need 0 <= m < n")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", BreakdownBoundWarning)
        rep = mc_breakdown(args.n, args.m, args.block_size, args.blocks, args.trials, args.seed)
    print(f"deterministic_bdp {fmt(float(rep.deterministic_bdp))} ({rep.deterministic_bdp})")
    print(f"bmom_limit {fmt(rep.bmom_limit)}")
    print(f"prob_lower_bound {fmt(rep.prob_lower_bound)}")
    print(f"mc_estimate {fmt(rep.mc_estimate)} (stderr {fmt(rep.mc_stderr)}, {rep.mc_trials} trials)")
    for w in caught:
        print(f"note: {w.message}")
    try:
        b = plan_bounds(args.n, args.m, args.risk, args.block_size)
    except InfeasibleError:
        if args.m > 0 and args.m / args.n < 0.5:
            # the size ceiling exists, only the requested size is too large
            b = plan_bounds(args.n, args.m, args.risk)
            print(f"n_B_max {b.n_B_max}")
            print(f"B_min {b.B_min} (at n_B = {b.n_B_max}, R = {fmt(args.risk)})")
        raise
    if b.unbounded:
        print("n_B_max unbounded (no corrupted rows)")
    else:
        print(f"n_B_max {b.n_B_max}")
    print(f"B_min {b.B_min} (at n_B = {b.n_B_max if not b.unbounded else 'any'}, R = {fmt(args.risk)})")
    print(f"B_min_at_block_size {b.B_min_at} (n_B = {args.block_size})")
    return EXIT_OK


# -- simulate --------------------------------------------------------------

def _scenario(args):
    d = {"preset": args.preset}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                extra = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {args.config}: {e}") from None
        if not isinstance(extra, dict):
            raise ConfigError("config must be a JSON object")
        d.update(extra)
    if args.reps is not None:
        d["repetitions"] = args.reps
    if args.seed is not None:
        d["master_seed"] = args.seed
    if args.methods:
        d["methods"] = [m for m in args.methods.split(",") if m]
    cfg = config_from_dict(d)
    if args.grid_cell is not None:
        m, beta = args.grid_cell
        cfg = replace(cfg.with_outlier(int(m), beta), outlier_grid=())
    return cfg


def _print_summary(result):
    cols = "  ".join(f"{m + '_mean':>14} {m + '_std':>12}" for m in METRICS)
    print(f"{result.config.name}")
    print(f"  {'method':<15} {'ok':>4} {'fail':>4}  {cols}")
    for a in result.aggregates:
        stats = "  ".join(f"{fmt(m):>14} {fmt(s):>12}" for m, s in zip(a.mean, a.std))
        print(f"  {a.method:<15} {a.n_ok:>4} {a.n_failed:>4}  {stats}")


def cmd_simulate(args):
    cfg = _scenario(args)
    output = args.output or cfg.output
    for sub in grid_configs(cfg):
        res = run_experiment(sub, workers=args.workers)
        _print_summary(res)
        if output:
            write_experiment(res, os.path.join(output, sub.name) if sub is not cfg else output)
    return EXIT_OK


# -- estimate --------------------------------------------------------------

def cmd_estimate(args):
    ds = load_csv(args.input, has_header=not args.no_header)
    if not 0 <= args.column < ds.p:
        raise ConfigError(f"--column must lie in [0, {ds.p})")
    x = ds.points[:, args.column]
    plan = BlockPlan(args.block_size, args.blocks, BOOTSTRAP)
    print(f"bmom {fmt(bmom(x, plan, args.seed))}")
    print(f"mean {fmt(float(np.mean(x)))}")
    print(f"n {x.size}")
    return EXIT_OK


# -- parser ----------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(prog="kbmom", description="Robust clustering with K-bMOM.")
    ap.add_argument("--backend-info", action="store_true", help="print the kernel backend and exit")
    sub = ap.add_subparsers(dest="command")

    c = sub.add_parser("cluster", help="cluster a CSV file")
    c.add_argument("--input", required=True)
    c.add_argument("--k", type=int, required=True)
    c.add_argument("--method", choices=CLUSTER_METHODS, default="kbmom")
    c.add_argument("--blocks", type=int, default=250)
    c.add_argument("--block-size", type=int)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--epsilon", type=float, default=1e-3)
    c.add_argument("--max-iter", type=int, help="default 50 for kbmom, 300 for Lloyd-type methods")
    c.add_argument("--init", choices=sorted(INIT_KINDS), default="kbmom_kmpp")
    c.add_argument("--seedings", type=int, default=None,
                   help="seedings per block (kbmom) or restarts (baselines)")
    c.add_argument("--alpha", type=float, default=0.0, help="trimming proportion")
    c.add_argument("--output", default=".", help="directory for labels.csv and centers.csv")
    c.add_argument("--no-header", action="store_true")
    c.set_defaults(func=cmd_cluster)

    t = sub.add_parser("tune", help="select the block size from the median-risk curve")
    t.add_argument("--input")
    t.add_argument("--preset", choices=PRESET_NAMES)
    t.add_argument("--k", type=int)
    t.add_argument("--blocks", type=int, default=50)
    t.add_argument("--grid", default="auto", help="auto, auto:STEP or a comma list")
    t.add_argument("--threshold", type=float, default=1.0)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--output")
    t.add_argument("--no-header", action="store_true")
    t.set_defaults(func=cmd_tune)

    b = sub.add_parser("breakdown", help="breakdown bounds and Monte-Carlo check")
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--m", type=int, required=True)
    b.add_argument("--block-size", type=int, required=True)
    b.add_argument("--blocks", type=int, required=True)
    b.add_argument("--trials", type=int, default=10000)
    b.add_argument("--risk", type=float, default=0.01)
    b.add_argument("--seed", type=int, default=0)
    b.set_defaults(func=cmd_breakdown)

    s = sub.add_parser("simulate", help="run a preset experiment")
    s.add_argument("preset", choices=PRESET_NAMES)
    s.add_argument("--config", help="JSON file overriding preset fields")
    s.add_argument("--reps", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--methods", help="comma list")
    s.add_argument("--grid-cell", nargs=2, type=float, metavar=("M", "BETA"),
                   help="run one outlier setting instead of the whole grid")
    s.add_argument("--workers", type=int)
    s.add_argument("--output", help="directory for reps.csv and summary.csv")
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("estimate", help="bMOM mean of one CSV column")
    e.add_argument("--input", required=True)
    e.add_argument("--column", type=int, default=0)
    e.add_argument("--block-size", type=int, required=True)
    e.add_argument("--blocks", type=int, required=True)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--no-header", action="store_true")
    e.set_defaults(func=cmd_estimate)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.backend_info:
        print(f"backend {kernels.BACKEND}")
        return EXIT_OK
    if args.command is None:
        ap.print_help()
        return EXIT_CONFIG
    if getattr(args, "seedings", 0) is None:
        args.seedings = 1 if args.method in ("kbmom", "block-kmom") else 10
    try:
        return args.func(args)
    except (ConfigError, InvalidPlanError, InfeasibleError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, CSVParseError, DegenerateIterationError, UndefinedMetricError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
