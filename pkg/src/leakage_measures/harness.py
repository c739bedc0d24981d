"""Sweeps over sample counts and bin counts, with timing and CSV output.

A sweep is split into independent jobs, one per ``(N, trial)``.  A job draws
the joint and product-of-marginals samples once (seed ``seed_base +
trial``), then

* for every bin count builds one shared pair of histograms and runs all
  histogram and transport estimators on it, and
* runs the sample-based estimators once (recorded with ``bins = 0``).

Estimator failures are caught and recorded; resource-guard failures are
marked as skipped.  Timing covers the estimator call only; the histogram
build time is reported in a separate column.
"""

from __future__ import annotations

import csv
import math
import time
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from os import PathLike

import numpy as np

from .bounds import RELATION_IDS, check_relations
from .errors import LeakageError, ParameterError, ResourceError
from .hist_divergence import js_hist, kl_hist, tv_hist
from .histogram import DEFAULT_BIN_BUDGET, build_histogram, joint_range
from .knn import KnnConfig, kl_knn
from .mmd import DEFAULT_SIGMA, MAX_SAMPLES, KernelSpec, mmd2_estimate
from .scenarios import RNG_ALGORITHM, ScenarioSpec, sample_joint, sample_product_of_marginals
from .transport import DEFAULT_LAMBDA, MAX_COST_ENTRIES, TransportProblem, sinkhorn, solve_lp

HIST_ESTIMATORS = ("kl-hist", "tv-hist", "js-hist")
TRANSPORT_ESTIMATORS = ("w1-lp", "w1-sinkhorn")
SAMPLE_ESTIMATORS = ("kl-knn", "mmd")
ESTIMATORS = HIST_ESTIMATORS + TRANSPORT_ESTIMATORS + SAMPLE_ESTIMATORS

OK = "ok"
SKIPPED = "skipped"
FAILED = "failed"

BOUND_TOL = 0.01

PAPER_HIST_SPAN = (100, 500, 1_000, 2_000, 3_000, 5_000, 10_000, 100_000,
                   1_000_000, 10_000_000, 100_000_000)
PAPER_SAMPLE_SPAN = (100, 500, 1_000, 2_000, 3_000, 4_000, 5_000, 7_000, 10_000, 20_000)
PAPER_BIN_SPAN = (8, 10, 12, 16, 20, 24, 28, 30)
PAPER_BIN_SWEEP_N = 10_000_000
PAPER_FIXED_BINS = 24

DESK_MAX_N = 1_000_000
DESK_MAX_BINS = 24


@dataclass(frozen=True)
class EstimatorConfig:
    """Tuning knobs shared by every cell of a sweep."""

    lam: float = DEFAULT_LAMBDA
    knn_k: tuple = (1,)
    sigma: float = DEFAULT_SIGMA
    mmd_max_samples: int | None = MAX_SAMPLES
    max_cost_entries: int = MAX_COST_ENTRIES
    bin_budget: int = DEFAULT_BIN_BUDGET

    def __post_init__(self):
        ks = (self.knn_k,) if np.isscalar(self.knn_k) else tuple(self.knn_k)
        if not ks:
            raise ParameterError("knn_k needs at least one value")
        object.__setattr__(self, "knn_k", tuple(int(k) for k in ks))
        for k in self.knn_k:
            KnnConfig(k)
        KernelSpec(self.sigma)
        if not self.lam > 0:
            raise ParameterError(f"lambda must be positive, got {self.lam}")


def knn_label(k: int) -> str:
    return f"kl-knn(k={k})"


@dataclass(frozen=True)
class SweepSpec:
    """What to run.

    ``sample_span`` applies to histogram and transport estimators.  The
    sample-based estimators use ``sample_estimator_span`` when given (the
    O(N^2) and neighbour-search costs call for a shorter span), otherwise
    ``sample_span`` as well.  An empty ``sample_estimator_span`` skips them.
    """

    scenario: ScenarioSpec
    estimators: tuple
    sample_span: tuple
    bin_span: tuple
    trials: int = 10
    seed_base: int = 0
    sample_estimator_span: tuple | None = None
    config: EstimatorConfig = field(default_factory=EstimatorConfig)

    def __post_init__(self):
        est = tuple(self.estimators)
        unknown = [e for e in est if e not in ESTIMATORS]
        if unknown:
            raise ParameterError(f"unknown estimators {unknown}; choose from {list(ESTIMATORS)}")
        if not est:
            raise ParameterError("no estimators selected")
        object.__setattr__(self, "estimators", tuple(dict.fromkeys(est)))
        for name in ("sample_span", "bin_span", "sample_estimator_span"):
            span = getattr(self, name)
            if span is None:
                continue
            span = tuple(int(v) for v in span)
            # an empty sample-estimator span switches those estimators off
            if (not span and name != "sample_estimator_span") or (span and min(span) < 1):
                raise ParameterError(f"{name} must be a nonempty list of positive counts")
            object.__setattr__(self, name, span)
        if int(self.trials) != self.trials or self.trials < 1:
            raise ParameterError(f"trials must be >= 1, got {self.trials}")
        object.__setattr__(self, "trials", int(self.trials))
        object.__setattr__(self, "seed_base", int(self.seed_base))

    @property
    def grid_estimators(self) -> tuple:
        return tuple(e for e in self.estimators if e not in SAMPLE_ESTIMATORS)

    @property
    def sample_estimators(self) -> tuple:
        return tuple(e for e in self.estimators if e in SAMPLE_ESTIMATORS)

    def n_values(self) -> tuple:
        grid_span = self.sample_span if self.grid_estimators else ()
        samp = self.sample_estimator_span if self.sample_estimator_span is not None else self.sample_span
        samp_span = samp if self.sample_estimators else ()
        return tuple(sorted(set(grid_span) | set(samp_span)))


@dataclass(frozen=True)
class EstimateRecord:
    estimator: str
    n_samples: int
    bins: int
    trial: int
    value: float
    runtime_seconds: float
    converged: bool | None = None
    status: str = OK
    reason: str = ""
    build_seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status == OK


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def _guarded(estimator, n, bins, trial, fn, build_seconds=0.0):
    """Run one estimator call and turn any failure into a record."""
    try:
        (value, converged), dt = _timed(fn)
    except ResourceError as exc:
        return EstimateRecord(estimator, n, bins, trial, math.nan, 0.0, None, SKIPPED,
                              f"resource: {exc}", build_seconds)
    except LeakageError as exc:
        return EstimateRecord(estimator, n, bins, trial, math.nan, 0.0, None, FAILED,
                              f"{type(exc).__name__}: {exc}", build_seconds)
    except Exception as exc:  # a broken cell must not stop its siblings
        return EstimateRecord(estimator, n, bins, trial, math.nan, 0.0, None, FAILED,
                              f"{type(exc).__name__}: {exc}", build_seconds)
    return EstimateRecord(estimator, n, bins, trial, float(value), dt, converged, OK, "", build_seconds)


def _histogram_pair(joint, prod, k, budget):
    r = joint_range(joint, prod)
    return (build_histogram(joint, k, r, bin_budget=budget),
            build_histogram(prod, k, r, bin_budget=budget))


def _grid_cell(spec: SweepSpec, joint, prod, n, k, trial):
    cfg = spec.config
    out = []
    try:
        (hp, hq), build = _timed(lambda: _histogram_pair(joint, prod, k, cfg.bin_budget))
    except LeakageError as exc:
        status = SKIPPED if isinstance(exc, ResourceError) else FAILED
        return [EstimateRecord(e, n, k, trial, math.nan, 0.0, None, status, f"histogram: {exc}")
                for e in spec.grid_estimators]

    fns = {
        "kl-hist": lambda: (kl_hist(hp, hq).value, None),
        "tv-hist": lambda: (tv_hist(hp, hq).value, None),
        "js-hist": lambda: (js_hist(hp, hq, base="base2").value, None),
    }

    def lp():
        plan = solve_lp(TransportProblem.from_histograms(hp, hq, max_entries=cfg.max_cost_entries),
                        max_entries=cfg.max_cost_entries)
        return plan.objective, plan.converged

    def sk():
        plan = sinkhorn(TransportProblem.from_histograms(hp, hq, max_entries=cfg.max_cost_entries),
                        cfg.lam, max_entries=cfg.max_cost_entries)
        return plan.objective, plan.converged

    fns["w1-lp"] = lp
    fns["w1-sinkhorn"] = sk
    for e in spec.grid_estimators:
        out.append(_guarded(e, n, k, trial, fns[e], build))
    return out


def _sample_cell(spec: SweepSpec, joint, prod, n, trial):
    cfg = spec.config
    out = []
    for e in spec.sample_estimators:
        if e == "kl-knn":
            for k in cfg.knn_k:
                out.append(_guarded(knn_label(k), n, 0, trial,
                                    lambda k=k: (kl_knn(joint, prod, KnnConfig(k)), None)))
        else:
            out.append(_guarded("mmd", n, 0, trial, lambda: (
                mmd2_estimate(joint, prod, KernelSpec(cfg.sigma), max_samples=cfg.mmd_max_samples).value,
                None)))
    return out


def _job(spec: SweepSpec, n: int, trial: int) -> list:
    scn = spec.scenario.with_seed(spec.seed_base + trial)
    joint = sample_joint(scn, n)
    prod = sample_product_of_marginals(scn, n)
    records = []
    if spec.grid_estimators and n in spec.sample_span:
        for k in spec.bin_span:
            records.extend(_grid_cell(spec, joint, prod, n, k, trial))
    samp = spec.sample_estimator_span if spec.sample_estimator_span is not None else spec.sample_span
    if spec.sample_estimators and n in samp:
        records.extend(_sample_cell(spec, joint, prod, n, trial))
    return records


def _record_key(r: EstimateRecord):
    return (r.estimator, r.n_samples, r.bins, r.trial)


def run_sweep(spec: SweepSpec, workers: int = 1, progress=None) -> list:
    """Run every cell of ``spec`` and return the records in a stable order.

    ``workers > 1`` runs jobs on a thread pool.  Values do not depend on
    the worker count; runtimes do, so timing runs should keep ``workers=1``.
    ``progress`` is called with each finished job's records.
    """
    jobs = [(n, t) for n in spec.n_values() for t in range(spec.trials)]
    records = []
    if workers <= 1:
        for n, t in jobs:
            recs = _job(spec, n, t)
            if progress:
                progress(recs)
            records.extend(recs)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for recs in pool.map(lambda job: _job(spec, *job), jobs):
                if progress:
                    progress(recs)
                records.extend(recs)
    records.sort(key=_record_key)
    return records


@dataclass(frozen=True)
class Summary:
    estimator: str
    n_samples: int
    bins: int
    mean: float
    std: float
    mean_runtime_s: float
    mean_build_s: float
    n_ok: int
    n_skipped: int
    n_failed: int
    all_converged: bool | None = None
    reason: str = ""
    bound_checks: dict = field(default_factory=dict)


def _group_stats(values: list) -> tuple[float, float]:
    if not values:
        return math.nan, math.nan
    arr = np.asarray(values, dtype=np.float64)
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return float(arr.mean()), std


def summarize(records, bound_tol: float = BOUND_TOL) -> list:
    """Per ``(estimator, n_samples, bins)`` mean, unbiased std and mean runtime.

    Groups holding the histogram KL, TV and JS (and optionally W1-LP) means
    for the same ``(n_samples, bins)`` also get the analytic relation flags
    evaluated on those means.
    """
    groups = defaultdict(list)
    for r in records:
        groups[(r.estimator, r.n_samples, r.bins)].append(r)
    out = []
    for key in sorted(groups):
        recs = groups[key]
        ok = [r for r in recs if r.ok]
        mean, std = _group_stats([r.value for r in ok])
        conv = [r.converged for r in ok if r.converged is not None]
        reasons = sorted({r.reason for r in recs if r.reason})
        out.append(Summary(
            *key, mean=mean, std=std,
            mean_runtime_s=_group_stats([r.runtime_seconds for r in ok])[0] if ok else math.nan,
            mean_build_s=_group_stats([r.build_seconds for r in recs])[0],
            n_ok=len(ok),
            n_skipped=sum(r.status == SKIPPED for r in recs),
            n_failed=sum(r.status == FAILED for r in recs),
            all_converged=all(conv) if conv else None,
            reason="; ".join(reasons),
        ))
    return _attach_bounds(out, bound_tol)


def _attach_bounds(summaries: list, tol: float) -> list:
    by_point = defaultdict(dict)
    for s in summaries:
        if s.bins > 0 and s.n_ok:
            by_point[(s.n_samples, s.bins)][s.estimator] = s.mean
    flags = {}
    for point, means in by_point.items():
        if not all(e in means for e in HIST_ESTIMATORS):
            continue
        try:
            rep = check_relations(means["kl-hist"], means["tv-hist"], means["js-hist"],
                                  w1=means.get("w1-lp", 0.0), tol=tol)
        except ParameterError:
            continue
        f = rep.as_flags()
        if "w1-lp" not in means:
            f = {k: v for k, v in f.items() if not k.startswith("w1")}
        flags[point] = f
    return [replace(s, bound_checks=flags.get((s.n_samples, s.bins), {})) if s.bins > 0 else s
            for s in summaries]


CSV_COLUMNS = ("estimator", "n_samples", "bins", "mean", "std", "mean_runtime_s", "mean_build_s",
               "n_ok", "n_skipped", "n_failed", "converged", "reason")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.9g}"
    return str(v)


def write_csv(summaries, fh) -> None:
    """Write the summary table to an open text stream."""
    rows = sorted(summaries, key=lambda s: (s.estimator, s.n_samples, s.bins))
    w = csv.writer(fh)
    w.writerow(list(CSV_COLUMNS) + [f"bound_{rid}" for rid in RELATION_IDS])
    for s in rows:
        w.writerow([_fmt(v) for v in (
            s.estimator, s.n_samples, s.bins, s.mean, s.std, s.mean_runtime_s, s.mean_build_s,
            s.n_ok, s.n_skipped, s.n_failed, s.all_converged, s.reason)]
            + [_fmt(s.bound_checks.get(rid)) for rid in RELATION_IDS])


def emit_csv(summaries, path: str | PathLike) -> None:
    """Write one row per summary, ordered by estimator, then N, then bins.

    Bound-check columns are ``bound_<relation>``; they are empty where the
    relation was not evaluated.
    """
    try:
        with open(path, "w", newline="") as fh:
            write_csv(summaries, fh)
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc


def value_table(records) -> list:
    """``(estimator, n, bins, trial, value)`` tuples, the reproducible part of a sweep."""
    return [(r.estimator, r.n_samples, r.bins, r.trial, r.value) for r in records]


def sweep_metadata(spec: SweepSpec) -> dict:
    return {"rng": RNG_ALGORITHM, "scenario": spec.scenario.to_dict(), "trials": spec.trials,
            "seed_base": spec.seed_base}


def preset_spans(preset: str, sweep: str) -> dict:
    """Default spans of a named preset.

    ``paper`` copies the published spans; ``desk`` caps them at
    ``N = 10**6`` samples and 24 bins per dimension.
    """
    if preset not in ("paper", "desk"):
        raise ParameterError(f"unknown preset {preset!r}")
    hist_span, samp_span, bin_span = PAPER_HIST_SPAN, PAPER_SAMPLE_SPAN, PAPER_BIN_SPAN
    bin_n = PAPER_BIN_SWEEP_N
    if preset == "desk":
        hist_span = tuple(n for n in hist_span if n <= DESK_MAX_N)
        bin_span = tuple(k for k in bin_span if k <= DESK_MAX_BINS)
        bin_n = min(bin_n, DESK_MAX_N)
    if sweep == "samples":
        return {"sample_span": hist_span, "bin_span": (PAPER_FIXED_BINS,),
                "sample_estimator_span": samp_span}
    if sweep == "bins":
        return {"sample_span": (bin_n,), "bin_span": bin_span, "sample_estimator_span": ()}
    raise ParameterError(f"unknown sweep kind {sweep!r}")
