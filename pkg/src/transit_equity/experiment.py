"""Experiment harness: budget sweeps, Monte Carlo trials, and CSV reports.

For each (budget, scenario) cell the benchmark LP is solved once; randomized
algorithms then run `trials` independent realizations on derived seeds and
deterministic ones run once. The reported equity of a randomized algorithm is
the worst-group mean coverage ratio across trials (the Monte Carlo estimate
of the randomized objective), with a normal-approximation 95% confidence
interval taken from the trial spread of that worst group.

Seed derivation: trial t of algorithm a (index within the algorithms tuple)
in cell (budget index b, scenario index s) uses
numpy.random.SeedSequence((master_seed, s, b, a, t)), so every trial is
independently reproducible and trials may run in any order or in parallel.
"""

from __future__ import annotations

import csv
import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .baselines import greedy, uniform
from .geo import (
    CostParams,
    SyntheticCityParams,
    build_instance,
    cluster_stops,
    eligibility_filter,
    generate_routes,
    synthetic_city,
)
from .instance_io import read_instance
from .lp import build_lp, solve_lp
from .model import Instance, StrategyOutcome, inject_ride_hailing, normalize
from .rounding import ras

SCENARIOS = ("bus_only", "combined")
ALGORITHMS = ("ras", "greedy", "uniform")
Z_95 = 1.96

RESULTS_HEADER = [
    "budget",
    "scenario",
    "algorithm",
    "mean_equity",
    "approx_ratio",
    "ci_low",
    "ci_high",
    "mean_cost",
    "max_cost",
]
PLOT_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ExperimentConfig:
    budgets: tuple[float, ...]
    scenarios: tuple[str, ...] = SCENARIOS
    algorithms: tuple[str, ...] = ALGORITHMS
    trials: int = 1000
    seed: int = 0
    instance_dir: str | None = None
    synthetic_seed: int = 0
    synthetic: SyntheticCityParams = SyntheticCityParams()
    route_count: int = 20
    route_seed: int = 0
    cost_params: CostParams = CostParams()
    solver: str = "highs"
    allow_small_budget: bool = False

    def __post_init__(self) -> None:
        if not self.budgets:
            raise ValueError("budgets must be nonempty")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        unknown = set(self.scenarios) - set(SCENARIOS)
        if unknown:
            raise ValueError(f"unknown scenarios {sorted(unknown)}")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ValueError(f"unknown algorithms {sorted(unknown)}")


@dataclass(frozen=True)
class ReportRow:
    budget: float  # raw money units
    scenario: str
    algorithm: str
    mean_equity: float
    approx_ratio: float
    ci_low: float
    ci_high: float
    mean_cost: float  # raw money units
    max_cost: float  # raw money units
    lp_value: float
    budget_normalized: float


@dataclass(frozen=True)
class ExperimentReport:
    rows: tuple[ReportRow, ...]


def _base_instances(config: ExperimentConfig) -> dict[str, Instance]:
    """One template instance per scenario; the budget is swapped per sweep point."""
    if config.instance_dir is not None:
        base = read_instance(config.instance_dir)
        variants = {"bus_only": base, "combined": inject_ride_hailing(base)}
    else:
        households, stops, guideline = synthetic_city(config.synthetic, config.synthetic_seed)
        eligible = eligibility_filter(households, stops)
        sites = cluster_stops(eligible)
        routes = generate_routes(
            sites, stops, config.route_count, config.route_seed, config.cost_params
        )
        variants = {
            name: build_instance(
                eligible,
                routes,
                budget=0.0,
                guideline=guideline,
                include_ride_hail=(name == "combined"),
                params=config.cost_params,
            )
            for name in SCENARIOS
        }
    return {name: variants[name] for name in config.scenarios}


def _trial_rng(config: ExperimentConfig, s: int, b: int, a: int, t: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((config.seed, s, b, a, t)))


@dataclass(frozen=True, eq=False)
class _CellStats:
    group_means: np.ndarray
    group_stds: np.ndarray
    costs: np.ndarray
    trials: int


def _run_randomized(
    instance: Instance,
    runner: Callable[[np.random.Generator], StrategyOutcome],
    rngs: Sequence[np.random.Generator],
) -> _CellStats:
    n_groups = len(instance.groups)
    ratios = np.empty((len(rngs), max(1, n_groups)))
    costs = np.empty(len(rngs))
    for t, rng in enumerate(rngs):
        outcome = runner(rng)
        costs[t] = outcome.total_cost
        if n_groups:
            ratios[t] = [outcome.group_ratios[g.id] for g in instance.groups]
        else:
            ratios[t] = 1.0
    ddof = 1 if len(rngs) > 1 else 0
    return _CellStats(
        group_means=ratios.mean(axis=0),
        group_stds=ratios.std(axis=0, ddof=ddof),
        costs=costs,
        trials=len(rngs),
    )


def _row_from_stats(
    budget: float,
    scenario: str,
    algorithm: str,
    stats: _CellStats,
    lp_value: float,
    scale: float,
    budget_normalized: float,
) -> ReportRow:
    worst = int(np.argmin(stats.group_means))
    mean_equity = float(stats.group_means[worst])
    half_width = Z_95 * float(stats.group_stds[worst]) / np.sqrt(stats.trials)
    ratio = mean_equity / lp_value if lp_value > 1e-12 else 1.0
    return ReportRow(
        budget=budget,
        scenario=scenario,
        algorithm=algorithm,
        mean_equity=mean_equity,
        approx_ratio=float(ratio),
        ci_low=mean_equity - half_width,
        ci_high=mean_equity + half_width,
        mean_cost=float(stats.costs.mean()) * scale,
        max_cost=float(stats.costs.max()) * scale,
        lp_value=lp_value,
        budget_normalized=budget_normalized,
    )


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    bases = _base_instances(config)
    rows: list[ReportRow] = []
    for s, scenario in enumerate(config.scenarios):
        base = bases[scenario]
        for b, budget in enumerate(config.budgets):
            instance = dataclasses.replace(base, budget=float(budget))
            norm, scale = normalize(instance, allow_small_budget=config.allow_small_budget)
            solution = solve_lp(build_lp(norm), solver=config.solver)
            t_star = solution.objective
            for a, algorithm in enumerate(config.algorithms):
                if algorithm == "ras":
                    rngs = [_trial_rng(config, s, b, a, t) for t in range(config.trials)]
                    stats = _run_randomized(norm, lambda rng: ras(norm, solution, rng), rngs)
                elif algorithm == "uniform":
                    rngs = [_trial_rng(config, s, b, a, t) for t in range(config.trials)]
                    stats = _run_randomized(norm, lambda rng: uniform(norm, rng), rngs)
                else:
                    outcome = greedy(norm)
                    if norm.groups:
                        means = np.array([outcome.group_ratios[g.id] for g in norm.groups])
                    else:
                        means = np.array([1.0])
                    stats = _CellStats(
                        group_means=means,
                        group_stds=np.zeros_like(means),
                        costs=np.array([outcome.total_cost]),
                        trials=1,
                    )
                rows.append(
                    _row_from_stats(budget, scenario, algorithm, stats, t_star, scale, norm.budget)
                )
    return ExperimentReport(rows=tuple(rows))


def compare_scenarios(report: ExperimentReport) -> list[tuple[float, str, float]]:
    """Per (budget, algorithm): equity delta of combined minus bus_only."""
    by_key = {(r.budget, r.scenario, r.algorithm): r for r in report.rows}
    budgets = sorted({r.budget for r in report.rows})
    algorithms: list[str] = []
    for r in report.rows:
        if r.algorithm not in algorithms:
            algorithms.append(r.algorithm)
    deltas: list[tuple[float, str, float]] = []
    for budget in budgets:
        for algorithm in algorithms:
            bus = by_key.get((budget, "bus_only", algorithm))
            combined = by_key.get((budget, "combined", algorithm))
            if bus is None or combined is None:
                raise ValueError(
                    f"both scenarios are required for budget {budget!r}, algorithm {algorithm!r}"
                )
            deltas.append((budget, algorithm, combined.mean_equity - bus.mean_equity))
    return deltas


def _fmt(value: float) -> str:
    return format(float(value), ".12g")


def emit(report: ExperimentReport, out_dir: str | Path) -> tuple[Path, Path]:
    """Write results.csv (fixed 9-column schema) and plot_data.json (one series
    per algorithm per scenario, schema_version marked). Byte-deterministic for
    a given report."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = out_dir / "results.csv"
    with results.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULTS_HEADER)
        for r in report.rows:
            writer.writerow(
                [
                    _fmt(r.budget),
                    r.scenario,
                    r.algorithm,
                    _fmt(r.mean_equity),
                    _fmt(r.approx_ratio),
                    _fmt(r.ci_low),
                    _fmt(r.ci_high),
                    _fmt(r.mean_cost),
                    _fmt(r.max_cost),
                ]
            )

    series: dict[tuple[str, str], dict] = {}
    for r in report.rows:
        key = (r.scenario, r.algorithm)
        entry = series.setdefault(
            key,
            {
                "scenario": r.scenario,
                "algorithm": r.algorithm,
                "budget": [],
                "budget_normalized": [],
                "lp_value": [],
                "mean_equity": [],
                "approx_ratio": [],
                "ci_low": [],
                "ci_high": [],
            },
        )
        entry["budget"].append(r.budget)
        entry["budget_normalized"].append(r.budget_normalized)
        entry["lp_value"].append(r.lp_value)
        entry["mean_equity"].append(r.mean_equity)
        entry["approx_ratio"].append(r.approx_ratio)
        entry["ci_low"].append(r.ci_low)
        entry["ci_high"].append(r.ci_high)
    plot = out_dir / "plot_data.json"
    payload = {
        "schema_version": PLOT_SCHEMA_VERSION,
        "series": [series[k] for k in sorted(series)],
    }
    plot.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return results, plot


def write_trial_log(
    instance: Instance,
    outcomes: Sequence[StrategyOutcome],
    path: str | Path,
) -> None:
    """Per-trial outcome log: trial, selected program ids, cost, equity."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["trial", "selected", "cost", "equity"])
        for t, outcome in enumerate(outcomes):
            writer.writerow(
                [
                    t,
                    ";".join(outcome.strategy.selected_ids(instance)),
                    _fmt(outcome.total_cost),
                    _fmt(outcome.equity),
                ]
            )
