"""Command-line interface.

Subcommands: solve-lp, ras, greedy, uniform, oracle, ingest, experiment.
Instances are directories of CSV files (households.csv / programs.csv /
meta.csv); see instance_io. The experiment subcommand accepts a flat
key=value config file, with flags overriding file entries.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import sys
from pathlib import Path

import numpy as np

from . import experiment as exp
from .baselines import greedy, uniform
from .geo import (
    CostParams,
    SyntheticCityParams,
    build_instance,
    cluster_stops,
    eligibility_filter,
    generate_routes,
    read_geo_households,
    read_poverty_guideline,
    read_transit_stops,
    synthetic_city,
    write_geo_households,
    write_poverty_guideline,
    write_transit_stops,
)
from .instance_io import read_instance, write_instance
from .lp import build_lp, dump_lp, solve_lp, verify_solution
from .model import inject_ride_hailing, normalize
from .oracles import opt_deterministic, opt_randomized
from .rounding import ras


def _load(args) -> tuple:
    instance = read_instance(args.instance)
    if getattr(args, "budget", None) is not None:
        instance = dataclasses.replace(instance, budget=args.budget)
    if getattr(args, "scenario", "bus_only") == "combined":
        instance = inject_ride_hailing(instance)
    return normalize(instance, allow_small_budget=args.allow_small_budget)


def _add_instance_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--instance", required=True, help="instance directory")
    parser.add_argument("--budget", type=float, default=None, help="override the stored budget")
    parser.add_argument(
        "--scenario",
        choices=["bus_only", "combined"],
        default="bus_only",
        help="combined appends virtual ride-hail programs",
    )
    parser.add_argument(
        "--allow-small-budget",
        action="store_true",
        help="accept a normalized budget below 1",
    )


def _cmd_solve_lp(args) -> int:
    instance, scale = _load(args)
    model = build_lp(instance)
    solution = solve_lp(model, solver=args.solver)
    if args.dump_lp:
        dump_lp(model, args.dump_lp)
    violations = verify_solution(instance, solution)
    print(f"lp_value {solution.objective:.9f}")
    print(f"budget_normalized {instance.budget:.9f}")
    print(f"scale {scale:.9f}")
    print(f"fractional_x {int(((solution.x_star > 0) & (solution.x_star < 1)).sum())}")
    print(f"violations {len(violations)}")
    return 0


def _run_trials(args, runner, instance) -> list:
    outcomes = []
    for t in range(args.trials):
        rng = np.random.default_rng(np.random.SeedSequence((args.seed, t)))
        outcomes.append(runner(rng))
    return outcomes


def _summarize(instance, outcomes, lp_value: float | None) -> None:
    if instance.groups:
        ratios = np.array(
            [[o.group_ratios[g.id] for g in instance.groups] for o in outcomes]
        )
        equity = float(ratios.mean(axis=0).min())
    else:
        equity = 1.0
    costs = np.array([o.total_cost for o in outcomes])
    print(f"trials {len(outcomes)}")
    print(f"mean_equity {equity:.9f}")
    if lp_value is not None:
        ratio = equity / lp_value if lp_value > 1e-12 else 1.0
        print(f"approx_ratio {ratio:.9f}")
    print(f"mean_cost {costs.mean():.9f}")
    print(f"max_cost {costs.max():.9f}")


def _cmd_ras(args) -> int:
    instance, _ = _load(args)
    solution = solve_lp(build_lp(instance), solver=args.solver)
    outcomes = _run_trials(args, lambda rng: ras(instance, solution, rng), instance)
    _summarize(instance, outcomes, solution.objective)
    if args.trial_log:
        exp.write_trial_log(instance, outcomes, args.trial_log)
    return 0


def _cmd_greedy(args) -> int:
    instance, _ = _load(args)
    outcome = greedy(instance)
    print(f"equity {outcome.equity:.9f}")
    print(f"cost {outcome.total_cost:.9f}")
    print(f"selected {';'.join(outcome.strategy.selected_ids(instance))}")
    if args.trial_log:
        exp.write_trial_log(instance, [outcome], args.trial_log)
    return 0


def _cmd_uniform(args) -> int:
    instance, _ = _load(args)
    outcomes = _run_trials(args, lambda rng: uniform(instance, rng), instance)
    _summarize(instance, outcomes, None)
    if args.trial_log:
        exp.write_trial_log(instance, outcomes, args.trial_log)
    return 0


def _cmd_oracle(args) -> int:
    instance, _ = _load(args)
    _, value_d = opt_deterministic(instance)
    _, value_r = opt_randomized(instance)
    solution = solve_lp(build_lp(instance), solver=args.solver)
    print(f"opt_deterministic {value_d:.9f}")
    print(f"opt_randomized {value_r:.9f}")
    print(f"lp_value {solution.objective:.9f}")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["opt_deterministic", "opt_randomized", "lp_value"])
            writer.writerow(
                [f"{value_d:.12g}", f"{value_r:.12g}", f"{solution.objective:.12g}"]
            )
    return 0


def _cmd_ingest(args) -> int:
    params = CostParams(rides_per_quarter=args.rides_per_quarter)
    if args.synthetic:
        households, stops, guideline = synthetic_city(SyntheticCityParams(), args.synthetic_seed)
        if args.dump_geo:
            out = Path(args.dump_geo)
            out.mkdir(parents=True, exist_ok=True)
            write_geo_households(households, out / "geo_households.csv")
            write_transit_stops(stops, out / "transit_stops.csv")
            write_poverty_guideline(guideline, out / "poverty_guideline.csv")
    else:
        if not (args.households and args.stops and args.guideline):
            print("ingest: provide --households/--stops/--guideline or --synthetic", file=sys.stderr)
            return 2
        households = read_geo_households(args.households)
        stops = read_transit_stops(args.stops)
        guideline = read_poverty_guideline(args.guideline)
    eligible = eligibility_filter(households, stops)
    sites = cluster_stops(eligible)
    routes = generate_routes(sites, stops, args.routes, args.seed, params)
    instance = build_instance(
        eligible,
        routes,
        budget=args.budget,
        guideline=guideline,
        include_ride_hail=(args.scenario == "combined"),
        params=params,
    )
    write_instance(instance, args.out)
    print(f"eligible_households {len(eligible)}")
    print(f"candidate_stops {len(sites)}")
    print(f"programs {len(instance.programs)}")
    print(f"instance_dir {args.out}")
    return 0


def _parse_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"config line without '=': {raw!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def _cmd_experiment(args) -> int:
    file_values = _parse_config_file(args.config) if args.config else {}

    def pick(key: str, flag_value, parse):
        if flag_value is not None:
            return flag_value
        if key in file_values:
            return parse(file_values[key])
        return None

    budgets = pick("budgets", args.budgets, lambda v: [float(x) for x in v.split(",")])
    if budgets is None:
        print("experiment: budgets are required (flag --budgets or config budgets=)", file=sys.stderr)
        return 2
    scenarios = pick("scenarios", args.scenarios, lambda v: v.split(","))
    algorithms = pick("algorithms", args.algorithms, lambda v: v.split(","))
    trials = pick("trials", args.trials, int)
    seed = pick("seed", args.seed, int)
    instance_dir = pick("instance", args.instance, str)
    synthetic_seed = pick("synthetic_seed", args.synthetic_seed, int)
    route_seed = pick("route_seed", args.route_seed, int)
    rides = pick("rides_per_quarter", args.rides_per_quarter, int)
    solver = pick("solver", args.solver, str)

    config = exp.ExperimentConfig(
        budgets=tuple(budgets),
        scenarios=tuple(scenarios) if scenarios is not None else exp.SCENARIOS,
        algorithms=tuple(algorithms) if algorithms is not None else exp.ALGORITHMS,
        trials=trials if trials is not None else 1000,
        seed=seed if seed is not None else 0,
        instance_dir=instance_dir,
        synthetic_seed=synthetic_seed if synthetic_seed is not None else 0,
        route_seed=route_seed if route_seed is not None else 0,
        cost_params=CostParams(rides_per_quarter=rides) if rides is not None else CostParams(),
        solver=solver if solver is not None else "highs",
        allow_small_budget=args.allow_small_budget,
    )
    report = exp.run_experiment(config)
    results, plot = exp.emit(report, args.out)
    print(f"results {results}")
    print(f"plot_data {plot}")
    if set(config.scenarios) == set(exp.SCENARIOS):
        for budget, algorithm, delta in exp.compare_scenarios(report):
            print(f"delta budget={budget:.12g} algorithm={algorithm} combined-bus={delta:.9f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="transit-equity",
        description="Equity-maximizing transit budget allocation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve-lp", help="solve the benchmark LP")
    _add_instance_args(p)
    p.add_argument("--solver", choices=["simplex", "highs"], default="simplex")
    p.add_argument("--dump-lp", default=None, help="write the model in LP text format")
    p.set_defaults(fn=_cmd_solve_lp)

    p = sub.add_parser("ras", help="run the randomized allocation strategy")
    _add_instance_args(p)
    p.add_argument("--solver", choices=["simplex", "highs"], default="simplex")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--trial-log", default=None, help="write per-trial outcomes CSV")
    p.set_defaults(fn=_cmd_ras)

    p = sub.add_parser("greedy", help="run the greedy baseline")
    _add_instance_args(p)
    p.add_argument("--trial-log", default=None)
    p.set_defaults(fn=_cmd_greedy)

    p = sub.add_parser("uniform", help="run the uniform-random baseline")
    _add_instance_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--trial-log", default=None)
    p.set_defaults(fn=_cmd_uniform)

    p = sub.add_parser("oracle", help="exact optimal values on a small instance")
    _add_instance_args(p)
    p.add_argument("--solver", choices=["simplex", "highs"], default="simplex")
    p.add_argument("--out", default=None, help="write (opt_d, opt_r, lp) CSV")
    p.set_defaults(fn=_cmd_oracle)

    p = sub.add_parser("ingest", help="build an instance from geodata")
    p.add_argument("--households", default=None, help="geo_households.csv")
    p.add_argument("--stops", default=None, help="transit_stops.csv")
    p.add_argument("--guideline", default=None, help="poverty_guideline.csv")
    p.add_argument("--synthetic", action="store_true", help="generate a synthetic city instead")
    p.add_argument("--synthetic-seed", type=int, default=0)
    p.add_argument("--dump-geo", default=None, help="also write the synthetic geodata CSVs here")
    p.add_argument("--budget", type=float, required=True)
    p.add_argument("--routes", type=int, default=20)
    p.add_argument("--seed", type=int, default=0, help="route generation seed")
    p.add_argument("--rides-per-quarter", type=int, default=120)
    p.add_argument(
        "--scenario", choices=["bus_only", "combined"], default="bus_only"
    )
    p.add_argument("--out", required=True, help="instance directory to write")
    p.set_defaults(fn=_cmd_ingest)

    p = sub.add_parser("experiment", help="budget sweep with Monte Carlo trials")
    p.add_argument("--config", default=None, help="flat key=value config file")
    p.add_argument("--budgets", type=lambda v: [float(x) for x in v.split(",")], default=None)
    p.add_argument("--scenarios", type=lambda v: v.split(","), default=None)
    p.add_argument("--algorithms", type=lambda v: v.split(","), default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--instance", default=None, help="instance directory (default: synthetic)")
    p.add_argument("--synthetic-seed", type=int, default=None)
    p.add_argument("--route-seed", type=int, default=None)
    p.add_argument("--rides-per-quarter", type=int, default=None)
    p.add_argument("--solver", choices=["simplex", "highs"], default=None)
    p.add_argument("--allow-small-budget", action="store_true")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(fn=_cmd_experiment)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
