"""Equity-maximizing budget allocation for public transit access."""

from .baselines import greedy, uniform
from .experiment import ExperimentConfig, ExperimentReport, compare_scenarios, emit, run_experiment
from .generators import disjoint_singletons_instance, random_instance
from .instance_io import read_instance, write_instance
from .lp import FractionalSolution, LpModel, build_lp, dump_lp, solve_lp, verify_solution
from .model import (
    BudgetTooSmallError,
    DeterministicStrategy,
    Group,
    Household,
    Instance,
    Program,
    ProgramKind,
    StrategyOutcome,
    evaluate,
    inject_ride_hailing,
    is_feasible,
    normalize,
)
from .oracles import (
    RandomizedStrategy,
    StrategySpace,
    enumerate_feasible,
    opt_deterministic,
    opt_randomized,
)
from .rounding import (
    AllocationVector,
    ExactRoundingStats,
    TwistStep,
    exact_expectation,
    plan_twist,
    ras,
    round_single,
    trajectory_leaves,
    twist,
)

__version__ = "0.1.0"

__all__ = [
    "AllocationVector",
    "BudgetTooSmallError",
    "DeterministicStrategy",
    "ExactRoundingStats",
    "ExperimentConfig",
    "ExperimentReport",
    "FractionalSolution",
    "Group",
    "Household",
    "Instance",
    "LpModel",
    "Program",
    "ProgramKind",
    "RandomizedStrategy",
    "StrategyOutcome",
    "StrategySpace",
    "TwistStep",
    "build_lp",
    "compare_scenarios",
    "disjoint_singletons_instance",
    "dump_lp",
    "emit",
    "enumerate_feasible",
    "evaluate",
    "exact_expectation",
    "greedy",
    "inject_ride_hailing",
    "is_feasible",
    "normalize",
    "opt_deterministic",
    "opt_randomized",
    "plan_twist",
    "random_instance",
    "ras",
    "read_instance",
    "round_single",
    "run_experiment",
    "solve_lp",
    "trajectory_leaves",
    "twist",
    "uniform",
    "verify_solution",
    "write_instance",
]
