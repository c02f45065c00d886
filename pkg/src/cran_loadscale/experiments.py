"""Evaluation metrics and seeded parameter sweeps.

Each sweep run draws a layout from its seed, calibrates demands for the load
limit under test, solves the non-CoMP baseline and the joint CoMP
optimization for a target set, and reports four metrics:

1. relative improvement of ``alpha`` over the baseline (%),
2. number of CoMP UEs,
3. relative increase of the total delivered (scaled) demand (%),
4. number of CoMP UEs inside the target set.
"""

from __future__ import annotations

import csv
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .comp import JointResult, joint_optimize
from .errors import LoadScaleError
from .scenario import ScenarioConfig, calibrate_demand, generate_scenario
from .solver import MaxAlphaResult, ScalingProblem, solve_max_alpha

log = logging.getLogger(__name__)

DEFAULT_S_SIZES = (10, 20, 40, 60, 80, 100)
DEFAULT_RHO_BARS = (0.4, 0.6, 0.8, 1.0)
THREADS_ENV = "CRAN_LOADSCALE_THREADS"
METRIC_KEYS = ("alpha_improvement_pct", "num_comp_ues", "delivered_demand_increase_pct", "num_comp_ues_in_S")


@dataclass(frozen=True)
class MetricBundle:
    alpha_improvement_pct: float
    num_comp_ues: int
    delivered_demand_increase_pct: float
    num_comp_ues_in_S: int

    def as_tuple(self):
        return tuple(getattr(self, k) for k in METRIC_KEYS)


def compute_metrics(baseline_result: MaxAlphaResult, joint_result: JointResult, target_set,
                    demands) -> MetricBundle:
    demands = np.asarray(demands, dtype=float)
    n = demands.size
    if joint_result.kappa_star.shape[1] != n or baseline_result.mu_star.shape != (n,):
        raise ValueError("demands, baseline and joint result disagree on the number of UEs")
    if joint_result.baseline is not None and joint_result.baseline is not baseline_result:
        if abs(joint_result.baseline.alpha_star - baseline_result.alpha_star) > 1e-12:
            raise ValueError("joint result was started from a different baseline")
    mask = np.zeros(n, dtype=bool)
    mask[list(target_set)] = True
    a_base, a_joint = baseline_result.alpha_star, joint_result.alpha_star

    def delivered(alpha):
        return alpha * demands[mask].sum() + demands[~mask].sum()

    comp = np.asarray(joint_result.comp_ues, dtype=int)
    return MetricBundle(
        alpha_improvement_pct=100.0 * (a_joint - a_base) / a_base,
        num_comp_ues=int(comp.size),
        delivered_demand_increase_pct=100.0 * (delivered(a_joint) - delivered(a_base)) / delivered(a_base),
        num_comp_ues_in_S=int(mask[comp].sum()),
    )


def target_order(seed: int, num_ues: int) -> np.ndarray:
    """Seeded UE permutation; a target set of size ``s`` is its first ``s`` entries."""
    return np.random.default_rng([int(seed), 0x5E7]).permutation(num_ues)


@dataclass
class SweepResult:
    rows: list[dict]
    summary: dict
    failures: list[dict] = field(default_factory=list)

    def write(self, out_dir, stem: str = "sweep"):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_rows_csv(out / f"{stem}_runs.csv", self.rows)
        (out / f"{stem}_summary.json").write_text(summary_json(self.summary, self.failures))
        return out / f"{stem}_runs.csv", out / f"{stem}_summary.json"


RUN_COLUMNS = ("seed", "s_size", "rho_bar", *METRIC_KEYS, "alpha_base", "alpha_joint",
               "accepted_links", "passes", "min_alpha_step", "max_load_ratio",
               "baseline_iterations", "iterations", "wall_time")


def write_rows_csv(path, rows: Sequence[dict]):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=RUN_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: row[k] for k in RUN_COLUMNS})


def summary_json(summary: dict, failures=()) -> str:
    doc = {"cells": summary, "failed_runs": len(failures), "failures": list(failures)}
    return json.dumps(doc, indent=1, sort_keys=True)


def _run_seed(seed: int, config: ScenarioConfig, s_sizes, rho_bars, epsilon, max_iters,
              max_passes, trace_dir):
    rows, failures = [], []
    try:
        scen = generate_scenario(config.replace(rng_seed=seed, calibrate=False))
    except LoadScaleError as exc:
        return rows, [{"seed": seed, "s_size": None, "rho_bar": None, "error": repr(exc)}]
    order = target_order(seed, config.num_ues)
    base_assoc = scen.baseline
    for rho_bar in rho_bars:
        try:
            inst = calibrate_demand(scen.instance.with_load_limit(rho_bar), base_assoc,
                                    config.calibration_epsilon)
        except LoadScaleError as exc:
            failures.append({"seed": seed, "s_size": None, "rho_bar": rho_bar, "error": repr(exc)})
            continue
        for s in s_sizes:
            if s > config.num_ues:
                raise ValueError(f"|S|={s} exceeds num_ues={config.num_ues}")
            target = tuple(int(j) for j in order[:s])
            problem = ScalingProblem(target, epsilon)
            t0 = time.perf_counter()
            try:
                base = solve_max_alpha(inst, base_assoc, problem, max_iters)
                joint = joint_optimize(inst, base_assoc, problem, max_passes, max_iters, baseline=base)
            except LoadScaleError as exc:
                log.warning("run seed=%s |S|=%s rho=%s failed: %s", seed, s, rho_bar, exc)
                failures.append({"seed": seed, "s_size": s, "rho_bar": rho_bar, "error": repr(exc)})
                continue
            wall = time.perf_counter() - t0
            metrics = compute_metrics(base, joint, target, inst.demand)
            loads = joint.kappa_star.kappa @ joint.mu_star
            steps = np.diff(joint.alpha_history)
            row = {"seed": seed, "s_size": s, "rho_bar": rho_bar, **asdict(metrics),
                   "alpha_base": base.alpha_star, "alpha_joint": joint.alpha_star,
                   "accepted_links": len(joint.accepted_links), "passes": joint.passes,
                   "min_alpha_step": float(steps.min()) if steps.size else 0.0,
                   "max_load_ratio": float(loads.max() / rho_bar),
                   "baseline_iterations": base.iterations,
                   "iterations": joint.inner_iterations, "wall_time": wall}
            rows.append(row)
            if trace_dir is not None:
                p = Path(trace_dir) / f"trace_seed{seed}_s{s}_rho{rho_bar:g}.csv"
                p.write_text(base.trace.to_csv())
    return rows, failures


def aggregate(rows: Sequence[dict]) -> dict:
    """Per-cell mean and (population) standard deviation, keyed ``"s=<S>,rho=<rho>"``."""
    cells: dict[tuple, list[dict]] = {}
    for r in rows:
        cells.setdefault((r["s_size"], r["rho_bar"]), []).append(r)
    out = {}
    for (s, rho), group in sorted(cells.items()):
        entry = {"s_size": s, "rho_bar": rho, "runs": len(group)}
        for key in METRIC_KEYS:
            vals = np.array([g[key] for g in group], dtype=float)
            entry[f"{key}_mean"] = float(vals.mean())
            entry[f"{key}_std"] = float(vals.std())
        out[f"s={s},rho={rho:g}"] = entry
    return out


def resolve_threads(threads: int | None = None) -> int:
    if threads is not None:
        return max(0, int(threads))
    raw = os.environ.get(THREADS_ENV, "0")
    try:
        return max(0, int(raw))
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None


def sweep(config: ScenarioConfig, s_sizes: Sequence[int] = DEFAULT_S_SIZES,
          rho_bars: Sequence[float] = DEFAULT_RHO_BARS, num_seeds: int = 5,
          epsilon: float = 1e-4, seeds: Sequence[int] | None = None, max_iters: int = 10_000,
          max_passes: int = 100, threads: int | None = None, trace_dir=None) -> SweepResult:
    """Run every (seed, |S|, rho_bar) combination and aggregate the metrics.

    Seeds default to ``config.rng_seed + 0 .. num_seeds - 1``. Parallelism is
    across seeds and capped by ``threads`` (or ``$CRAN_LOADSCALE_THREADS``;
    0 runs sequentially). Output order does not depend on it.
    """
    if not s_sizes or not rho_bars:
        raise ValueError("s_sizes and rho_bars must be non-empty")
    if seeds is None:
        if num_seeds < 1:
            raise ValueError("num_seeds must be at least 1")
        seeds = [int(config.rng_seed) + k for k in range(num_seeds)]
    if trace_dir is not None:
        Path(trace_dir).mkdir(parents=True, exist_ok=True)
    args = (config, tuple(s_sizes), tuple(rho_bars), epsilon, max_iters, max_passes, trace_dir)
    workers = resolve_threads(threads)
    if workers <= 1:
        results = [_run_seed(s, *args) for s in seeds]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_seed, seeds, *[[a] * len(seeds) for a in args]))
    rows = [r for rs, _ in results for r in rs]
    failures = [f for _, fs in results for f in fs]
    rows.sort(key=lambda r: (r["seed"], r["rho_bar"], r["s_size"]))
    if failures:
        log.warning("%d run(s) failed and were excluded", len(failures))
    return SweepResult(rows, aggregate(rows), failures)
