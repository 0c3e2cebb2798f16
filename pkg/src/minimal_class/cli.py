"""Command line front end.

Subcommands: ``fit``, ``score``, ``search``, ``report``, ``simulate`` and
``pipeline``.  Every run writes its outputs plus ``manifest.json`` (the fully
resolved options, including the seed) into ``--out``.  Passing that file back
with ``--manifest`` replays the run; explicit flags still win.  A flat
``key=value`` file given with ``--config`` supplies defaults, with keys
namespaced by module (``search.iters=100``, ``solver.alpha=0.4``, ...).
"""

from __future__ import annotations

import argparse
import json
import logging
import secrets
import sys
from pathlib import Path

import numpy as np

from . import files
from .core import ExpansionOptions, expand_features, read_csv, standardize, to_raw_scale, write_csv
from .errors import BadInput, InvalidConfig, MinimalClassError
from .minclass import (DEFAULT_ETA_FACTOR, assemble_minimal_class, best_in_pool,
                       estimate_noise_variance,
                       frequency_matrix, keep_top, unique_counts)
from .scoring import default_delta_grid, score_predictors
from .search import AnnealingConfig, merge_pools, parse_schedule, run_chains
from .simulation import ScenarioConfig, StudyOptions, run_study
from .solver import PenaltySpec, cv_select_lambda, solve_penalized

log = logging.getLogger("minimal_class")

IO_EXIT = 20

# config-file key -> argparse dest
CONFIG_KEYS = {
    "data.input": "input", "data.response": "response", "data.ddof": "ddof",
    "data.expand": "expand", "run.seed": "seed", "run.out": "out", "run.threads": "threads",
    "solver.lambda": "lam", "solver.alpha": "alpha", "solver.cv_folds": "cv_folds",
    "scoring.delta_step": "delta_step", "scoring.alpha": "alpha",
    "search.kappa": "kappa", "search.starts": "starts", "search.iters": "iters",
    "search.temps_geometric": "temps_geometric", "search.gamma_file": "gamma_file",
    "search.keep": "keep",
    "minclass.eta": "eta", "minclass.eta_factor": "eta_factor",
    "minclass.threshold": "threshold", "minclass.pool": "pool",
    "simulation.p": "p", "simulation.snr": "snr", "simulation.replicates": "replicates",
    "simulation.n": "n", "simulation.starts": "starts",
}
NOT_RECORDED = {"config", "manifest", "func", "verbose"}


def _int_list(text) -> list[int]:
    if isinstance(text, list):
        return [int(v) for v in text]
    text = str(text).strip()
    if ".." in text:
        lo, hi = text.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(v) for v in text.split(",") if v.strip()]


def _float_list(text) -> list[float]:
    if isinstance(text, list):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="minclass", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_data=True):
        p.add_argument("--config", help="key=value defaults file")
        p.add_argument("--manifest", help="replay the options recorded in a manifest")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=1)
        if needs_data:
            p.add_argument("--input", help="CSV with a header row")
            p.add_argument("--response", help="name of the response column")
            p.add_argument("--ddof", type=int, default=1, choices=(0, 1),
                           help="column scaling divisor n - ddof")

    def scoring_opts(p):
        p.add_argument("--alpha", type=float, default=0.4, help="Elastic-Net mixing")
        p.add_argument("--cv-folds", type=int, default=10)
        p.add_argument("--delta-step", type=float, default=0.02)

    def search_opts(p, kappa_default):
        p.add_argument("--kappa", default=kappa_default, help="sizes, e.g. 4,5,6 or 1..10")
        p.add_argument("--starts", type=int, default=3)
        p.add_argument("--iters", type=int, default=100)
        p.add_argument("--temps-geometric", default="10:0.7:20", help="scale:ratio:count")

    def report_opts(p):
        p.add_argument("--eta", type=float, default=None)
        p.add_argument("--eta-factor", type=float, default=DEFAULT_ETA_FACTOR,
                       help="eta = factor * estimated noise variance when --eta is absent")
        p.add_argument("--threshold", type=float, default=0.25)

    p = sub.add_parser("fit", help="Lasso / Elastic-Net fit")
    common(p)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--cv-folds", type=int, default=10)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("score", help="predictor scores")
    common(p)
    scoring_opts(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("search", help="annealing search from a score file")
    common(p)
    search_opts(p, "4,5,6")
    p.add_argument("--gamma-file", help="CSV from `score` (uses its gamma column)")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("report", help="minimal classes and frequency matrix from a pool")
    common(p)
    p.add_argument("--pool", help="pool CSV written by `search` or `pipeline`")
    report_opts(p)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("simulate", help="simulation study recovery table")
    common(p, needs_data=False)
    p.add_argument("--p", default="200", help="comma list of predictor counts")
    p.add_argument("--snr", default="2", help="comma list of SNR values")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--replicates", type=int, default=200)
    p.add_argument("--starts", type=int, default=1)
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("--table", default="table.csv", help="file name of the CSV table in --out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("pipeline", help="scores, search and report in one go")
    common(p)
    scoring_opts(p)
    search_opts(p, "1..10")
    p.add_argument("--keep", type=int, default=5, help="best models kept per size and start")
    p.add_argument("--expand", default="", help="log,sqrt,square,interactions")
    report_opts(p)
    p.set_defaults(func=cmd_pipeline)
    return parser


def read_config_file(path) -> dict:
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidConfig(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in CONFIG_KEYS:
                raise InvalidConfig(f"{path}:{lineno}: unknown key {key!r}")
            out[CONFIG_KEYS[key]] = value
    return out


def resolve_args(argv) -> argparse.Namespace:
    """Parse ``argv`` with manifest and config-file values as defaults."""
    parser = build_parser()
    first = parser.parse_args(argv)
    defaults: dict = {}
    if getattr(first, "manifest", None):
        with open(first.manifest) as fh:
            recorded = json.load(fh)
        if recorded.get("command") != first.command:
            raise InvalidConfig(
                f"manifest is for {recorded.get('command')!r}, not {first.command!r}")
        defaults.update({k: v for k, v in recorded.items() if k not in ("command", "derived")})
    if getattr(first, "config", None):
        defaults.update(read_config_file(first.config))
    if not defaults:
        return first
    sub = parser._subparsers._group_actions[0].choices[first.command]
    known = {a.dest: a for a in sub._actions}
    typed = {}
    for dest, value in defaults.items():
        action = known.get(dest)
        if action is None:
            continue
        if value is not None and action.type is not None and isinstance(value, str):
            value = action.type(value)
        typed[dest] = value
    sub.set_defaults(**typed)
    return parser.parse_args(argv)


class Run:
    """Output directory plus the manifest being assembled for it."""

    def __init__(self, args):
        self.args = args
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        if args.seed is None:
            args.seed = secrets.randbits(32)
        self.derived: dict = {}

    def path(self, name) -> Path:
        return self.out / name

    def write_manifest(self):
        record = {k: v for k, v in sorted(vars(self.args).items()) if k not in NOT_RECORDED}
        record["derived"] = self.derived
        with open(self.path("manifest.json"), "w") as fh:
            fh.write(json.dumps(record, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(type(v))


def load_data(args, run: Run | None = None):
    if not args.input:
        raise BadInput("--input is required")
    if not args.response:
        raise BadInput("--response is required")
    raw = read_csv(args.input, args.response)
    expand = getattr(args, "expand", "")
    if expand:
        raw, skipped = expand_features(raw, ExpansionOptions.parse(expand))
        for s in skipped:
            log.warning("skipped transform %s (column not strictly positive)", s)
        if run is not None:
            run.derived["skipped_transforms"] = skipped
    if run is not None:
        run.derived["n"] = raw.n
        run.derived["p"] = raw.p
    return standardize(raw, ddof=args.ddof)


def cmd_fit(args):
    run = Run(args)
    data = load_data(args, run)
    if args.lam is None:
        lam, cv = cv_select_lambda(data, args.alpha, args.cv_folds, seed=args.seed)
        write_csv(run.path("cv_curve.csv"), ["lambda", "cv_mse", "cv_se"],
                  zip(cv.lambdas, cv.mse, cv.se))
        run.derived["selected_lambda"] = lam
    else:
        lam = args.lam
    fit = solve_penalized(data, PenaltySpec.from_alpha(lam, args.alpha))
    raw_coef, intercept = to_raw_scale(data, range(data.p), fit.coefficients)
    rows = [[j, data.column_names[j], fit.coefficients[j], raw_coef[j]] for j in range(data.p)]
    write_csv(run.path("coefficients.csv"), ["index", "predictor", "standardized", "raw"], rows)
    run.derived.update(intercept=intercept, support_size=len(fit.support),
                       converged=fit.converged, iterations=fit.iterations, objective=fit.objective)
    run.write_manifest()
    return 0


def cmd_score(args):
    run = Run(args)
    data = load_data(args, run)
    report = score_predictors(data, args.alpha, args.cv_folds,
                              default_delta_grid(args.delta_step), args.seed)
    files.write_gamma(run.path("gamma.csv"), report, data.column_names)
    part = report.gamma.partition
    run.derived.update(lasso_lambda=report.lasso_lambda, enet_lambda=report.enet_lambda,
                       lasso_support=len(part.s_l), enet_only=len(part.s_plus),
                       positive_scores=len(report.gamma.support))
    run.write_manifest()
    return 0


def _template(args) -> AnnealingConfig:
    return AnnealingConfig(kappa=1, temperatures=parse_schedule(args.temps_geometric),
                           iters_per_temp=args.iters)


def cmd_search(args):
    run = Run(args)
    data = load_data(args, run)
    if not args.gamma_file:
        raise BadInput("--gamma-file is required")
    gamma = files.read_gamma(args.gamma_file, data.p)
    chains = run_chains(data, gamma, _int_list(args.kappa), args.starts, _template(args), args.seed)
    pool = merge_pools(p for _, p in chains)
    files.write_pool(run.path("pool.csv"), pool, data.column_names)
    run.derived["pool_size"] = len(pool)
    run.write_manifest()
    return 0


def _write_reports(run: Run, pool, n: int | None, args, names) -> None:
    if args.eta is not None:
        eta = args.eta
    else:
        if n is None:
            raise BadInput("--eta is required when the data (--input) is not given")
        sigma2 = estimate_noise_variance(n, pool)
        k_best = len(best_in_pool(pool)[0])
        if n - k_best < 5:
            log.warning("noise variance rests on %d residual degrees of freedom", n - k_best)
        eta = args.eta_factor * sigma2
        run.derived.update(sigma2=sigma2, sigma2_model_size=k_best,
                           sigma2_residual_dof=n - k_best)
    run.derived["eta"] = eta
    classes = [assemble_minimal_class(pool, k, eta) for k in pool.sizes() if pool.of_size(k)]
    files.write_minimal_classes(run.path("minimal_class.csv"), classes, names)
    files.write_unique_counts(run.path("unique_counts.csv"), unique_counts(pool))
    members = [m for mc in classes for m, _ in mc.models]
    if members:
        freq = frequency_matrix(members, args.threshold)
        files.write_frequency(run.path("frequency.csv"), freq, names)


def cmd_report(args):
    run = Run(args)
    if not args.pool:
        raise BadInput("--pool is required")
    pool, labels = files.read_pool(args.pool)
    n = None
    names = labels or None
    if args.input:
        data = load_data(args, run)
        n = data.n
        names = data.column_names
    _write_reports(run, pool, n, args, names)
    run.write_manifest()
    return 0


def cmd_pipeline(args):
    run = Run(args)
    data = load_data(args, run)
    report = score_predictors(data, args.alpha, args.cv_folds,
                              default_delta_grid(args.delta_step), args.seed)
    files.write_gamma(run.path("gamma.csv"), report, data.column_names)
    gamma = report.gamma
    kappas = [k for k in _int_list(args.kappa) if k < len(gamma.support)]
    dropped = sorted(set(_int_list(args.kappa)) - set(kappas))
    if dropped:
        log.warning("sizes %s skipped: only %d predictors have positive score",
                    dropped, len(gamma.support))
    chains = run_chains(data, gamma, kappas, args.starts, _template(args), args.seed)
    kept = merge_pools(keep_top(pool, [k], args.keep) for (k, _), pool in chains)
    files.write_pool(run.path("pool.csv"), kept, data.column_names)
    _write_reports(run, kept, data.n, args, data.column_names)
    run.derived.update(lasso_lambda=report.lasso_lambda, enet_lambda=report.enet_lambda,
                       positive_scores=len(gamma.support), skipped_sizes=dropped,
                       unique_models=len(kept))
    run.write_manifest()
    return 0


def cmd_simulate(args):
    run = Run(args)
    cells = [ScenarioConfig(args.n, p, snr, args.replicates, args.seed)
             for p in _int_list(args.p) for snr in _float_list(args.snr)]
    options = StudyOptions(starts=args.starts, iters=args.iters)
    table = run_study(cells, options, workers=max(1, args.threads))
    header, rows = table.csv_rows()
    write_csv(run.path(args.table), header, rows)
    text = table.render()
    with open(run.path(Path(args.table).stem + ".txt"), "w") as fh:
        fh.write(text + "\n")
    print(text)
    run.write_manifest()
    return 0


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = resolve_args(argv)
    except MinimalClassError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except MinimalClassError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return IO_EXIT


if __name__ == "__main__":
    sys.exit(main())
