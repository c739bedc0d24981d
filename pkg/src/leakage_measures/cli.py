"""Command line entry point: ``leakage-measures <command> [options]``.

Commands
--------
oracle          closed-form reference values as JSON
estimate        one (N, bins) cell, any number of trials
sweep-samples   sweep over sample counts at a fixed bin count
sweep-bins      sweep over bin counts at a fixed sample count

Options can also come from ``--config file.json`` using the same names
(dashes or underscores).  Command-line values win over the file, which
wins over the built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import LeakageError, ParameterError
from .harness import (ESTIMATORS, EstimatorConfig, SweepSpec, emit_csv, preset_spans,
                      run_sweep, summarize, write_csv)
from .histogram import build_histogram, joint_range
from .mmd import DEFAULT_SIGMA
from .oracles import share_oracle
from .scenarios import ScenarioSpec, sample_joint, sample_product_of_marginals
from .transport import DEFAULT_LAMBDA, TransportProblem, dump_plan_csv, sinkhorn, solve_lp

DEFAULTS = {
    "scenario": "share",
    "sigma_x_sq": 1.0,
    "sigma_r_sq": 10.0,
    "seed": 0,
    "metric": None,
    "bins": None,
    "n": None,
    "trials": None,
    "lambda": DEFAULT_LAMBDA,
    "k": [1],
    "sigma": DEFAULT_SIGMA,
    "out": None,
    "preset": "desk",
    "workers": 1,
    "dump_plan": None,
}

_ALIASES = {"kind": "scenario", "metrics": "metric", "lam": "lambda", "n_samples": "n"}


def _count_list(text: str) -> list:
    try:
        vals = [int(float(v)) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated counts, got {text!r}") from None
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError(f"counts must be positive, got {text!r}")
    return vals


def _metric_list(text: str) -> list:
    vals = [v.strip() for v in text.split(",") if v.strip()]
    bad = [v for v in vals if v not in ESTIMATORS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown metric(s) {bad}; choose from {', '.join(ESTIMATORS)}")
    return vals


def _add_common(sp: argparse.ArgumentParser, sweep: bool):
    sp.add_argument("--config", help="JSON file with option values")
    sp.add_argument("--scenario", help="share or three_party_mult")
    sp.add_argument("--sigma-x-sq", dest="sigma_x_sq", type=float)
    sp.add_argument("--sigma-r-sq", dest="sigma_r_sq", type=float)
    sp.add_argument("--seed", type=int, help="seed of trial 0; trial t uses seed + t")
    if sweep is None:
        return
    sp.add_argument("--metric", action="extend", type=_metric_list,
                    help="estimator name, repeatable or comma-separated")
    sp.add_argument("--bins", action="extend", type=_count_list, help="bins per dimension")
    sp.add_argument("--n", action="extend", type=_count_list, help="sample count(s)")
    sp.add_argument("--trials", type=int)
    sp.add_argument("--lambda", dest="lambda", type=float, help="Sinkhorn regularization strength")
    sp.add_argument("--k", action="extend", type=_count_list, help="k-NN neighbour order(s)")
    sp.add_argument("--sigma", type=float, help="MMD Gaussian kernel bandwidth")
    sp.add_argument("--out", help="summary CSV path (stdout when omitted)")
    sp.add_argument("--workers", type=int, help="parallel jobs")
    if sweep:
        sp.add_argument("--preset", choices=("desk", "paper"))
    else:
        sp.add_argument("--dump-plan", dest="dump_plan",
                        help="write the trial-0 transport plan as i,j,mass triplets")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="leakage-measures",
                                 description="Sample-based leakage estimators and benchmarks.")
    sub = ap.add_subparsers(dest="command", required=True)
    _add_common(sub.add_parser("oracle", help="closed-form reference values"), None)
    _add_common(sub.add_parser("estimate", help="run one (N, bins) cell"), False)
    _add_common(sub.add_parser("sweep-samples", help="sweep over sample counts"), True)
    _add_common(sub.add_parser("sweep-bins", help="sweep over bin counts"), True)
    return ap


def _load_config(path) -> dict:
    if not path:
        return {}
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParameterError(f"cannot read config {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ParameterError("config file must hold a JSON object")
    cfg = {}
    for key, val in raw.items():
        key = key.replace("-", "_")
        key = _ALIASES.get(key, key)
        if key not in DEFAULTS:
            raise ParameterError(f"unknown config key {key!r}")
        if key in ("bins", "n", "k") and not isinstance(val, list):
            val = [val]
        if key == "metric" and isinstance(val, str):
            val = [val]
        cfg[key] = val
    return cfg


def resolve_options(args: argparse.Namespace) -> dict:
    """Merge defaults, config file and command line, in increasing priority."""
    opts = dict(DEFAULTS)
    opts.update(_load_config(getattr(args, "config", None)))
    for key, val in vars(args).items():
        if key in DEFAULTS and val is not None:
            opts[key] = val
    return opts


def _scenario(opts) -> ScenarioSpec:
    return ScenarioSpec(opts["scenario"], opts["sigma_x_sq"], opts["sigma_r_sq"], opts["seed"])


def _estimator_config(opts) -> EstimatorConfig:
    return EstimatorConfig(lam=float(opts["lambda"]), knn_k=tuple(opts["k"]), sigma=float(opts["sigma"]))


def _single(opts, name, default):
    val = opts[name]
    if val is None:
        return default
    if len(val) != 1:
        raise ParameterError(f"--{name} takes a single value for this command")
    return int(val[0])


def _write(summaries, out):
    if out:
        emit_csv(summaries, out)
    else:
        write_csv(summaries, sys.stdout)


def _cmd_oracle(opts) -> int:
    rep = share_oracle(_scenario(opts))
    json.dump(rep.to_dict(), sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0


def _cmd_estimate(opts) -> int:
    scn = _scenario(opts)
    n = _single(opts, "n", 10_000)
    k = _single(opts, "bins", 24)
    metrics = opts["metric"] or ["kl-hist", "tv-hist", "js-hist"]
    spec = SweepSpec(scn, tuple(metrics), (n,), (k,), trials=int(opts["trials"] or 1),
                     seed_base=scn.seed, config=_estimator_config(opts))
    _write(summarize(run_sweep(spec, workers=int(opts["workers"]))), opts["out"])
    if opts["dump_plan"]:
        _dump_plan(scn, n, k, metrics, opts)
    return 0


def _dump_plan(scn, n, k, metrics, opts):
    transport = [m for m in metrics if m in ("w1-lp", "w1-sinkhorn")]
    if not transport:
        raise ParameterError("--dump-plan needs --metric w1-lp or w1-sinkhorn")
    joint, prod = sample_joint(scn, n), sample_product_of_marginals(scn, n)
    r = joint_range(joint, prod)
    tp = TransportProblem.from_histograms(build_histogram(joint, k, r), build_histogram(prod, k, r))
    plan = solve_lp(tp) if transport[0] == "w1-lp" else sinkhorn(tp, float(opts["lambda"]))
    dump_plan_csv(plan, opts["dump_plan"])


def _cmd_sweep(opts, kind) -> int:
    scn = _scenario(opts)
    spans = preset_spans(opts["preset"], kind)
    metrics = opts["metric"] or (list(ESTIMATORS) if scn.dim == 2 else ["kl-hist", "tv-hist", "js-hist"])
    if kind == "samples":
        if opts["n"]:
            spans["sample_span"] = tuple(opts["n"])
            spans["sample_estimator_span"] = tuple(opts["n"])
        if opts["bins"]:
            spans["bin_span"] = (_single(opts, "bins", 24),)
    else:
        if opts["bins"]:
            spans["bin_span"] = tuple(opts["bins"])
        if opts["n"]:
            spans["sample_span"] = (_single(opts, "n", 0),)
    spec = SweepSpec(scn, tuple(metrics), trials=int(opts["trials"] or 10), seed_base=scn.seed,
                     config=_estimator_config(opts), **spans)
    _write(summarize(run_sweep(spec, workers=int(opts["workers"]))), opts["out"])
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = resolve_options(args)
        if args.command == "oracle":
            return _cmd_oracle(opts)
        if args.command == "estimate":
            return _cmd_estimate(opts)
        return _cmd_sweep(opts, "samples" if args.command == "sweep-samples" else "bins")
    except (LeakageError, ValueError, TypeError, OSError) as exc:
        print(f"leakage-measures: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
