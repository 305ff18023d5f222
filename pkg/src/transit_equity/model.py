"""Core domain model: households, programs, protected groups, and strategies.

An `Instance` bundles the needy households, the candidate coverage programs
(bus lines and single-household ride-hail enrollments), a budget, and the
protected groups whose minimum coverage ratio defines the equity objective.
All domain types are immutable after construction and safe to share across
concurrent evaluators.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

INTEGRALITY_EPS = 1e-9

VIRTUAL_PROGRAM_PREFIX = "ride-hail:"


class BudgetTooSmallError(ValueError):
    """Normalized budget fell below 1, outside the regime the rounding
    guarantees assume. Callers may re-run with allow_small_budget=True."""


class ProgramKind(str, Enum):
    BUS_LINE = "bus_line"
    VIRTUAL_RIDE_HAIL = "virtual_ride_hail"


@dataclass(frozen=True)
class Household:
    """A qualified needy household.

    ride_hail_cost is the cost of enrolling this household into the
    subsidized ride-hail program for the planning window; None means the
    household cannot be served that way. group_ids lists the protected
    groups the household belongs to (possibly none, possibly several).
    """

    id: str
    ride_hail_cost: float | None = None
    group_ids: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if self.ride_hail_cost is not None and self.ride_hail_cost < 0:
            raise ValueError(f"household {self.id}: ride_hail_cost must be >= 0")
        object.__setattr__(self, "group_ids", frozenset(self.group_ids))


@dataclass(frozen=True)
class Program:
    """A candidate coverage program: a bus line covering a set of households,
    or a virtual single-household line encoding ride-hail enrollment."""

    id: str
    cost: float
    covers: frozenset[str]
    kind: ProgramKind = ProgramKind.BUS_LINE

    def __post_init__(self) -> None:
        if self.cost < 0:
            raise ValueError(f"program {self.id}: cost must be >= 0")
        object.__setattr__(self, "covers", frozenset(self.covers))
        if not self.covers:
            raise ValueError(f"program {self.id}: covers must be nonempty")
        if self.kind is ProgramKind.VIRTUAL_RIDE_HAIL and len(self.covers) != 1:
            raise ValueError(
                f"program {self.id}: a virtual ride-hail program covers exactly one household"
            )


@dataclass(frozen=True)
class Group:
    """A protected group of households; groups may overlap."""

    id: str
    members: frozenset[str]

    def __post_init__(self) -> None:
        object.__setattr__(self, "members", frozenset(self.members))
        if not self.members:
            raise ValueError(f"group {self.id}: members must be nonempty")


@dataclass(frozen=True)
class Instance:
    """A full problem instance. Group membership must be consistent: a
    household lists group g in group_ids iff g's member set contains it."""

    households: tuple[Household, ...]
    programs: tuple[Program, ...]
    budget: float
    groups: tuple[Group, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "households", tuple(self.households))
        object.__setattr__(self, "programs", tuple(self.programs))
        object.__setattr__(self, "groups", tuple(self.groups))
        if self.budget < 0:
            raise ValueError("budget must be >= 0")
        ids = [h.id for h in self.households]
        known = set(ids)
        if len(known) != len(ids):
            raise ValueError("duplicate household ids")
        pids = [p.id for p in self.programs]
        if len(set(pids)) != len(pids):
            raise ValueError("duplicate program ids")
        gids = [g.id for g in self.groups]
        if len(set(gids)) != len(gids):
            raise ValueError("duplicate group ids")
        for p in self.programs:
            missing = p.covers - known
            if missing:
                raise ValueError(f"program {p.id} covers unknown households {sorted(missing)}")
        by_group: dict[str, set[str]] = {g.id: set() for g in self.groups}
        for h in self.households:
            for gid in h.group_ids:
                if gid not in by_group:
                    raise ValueError(f"household {h.id} lists unknown group {gid}")
                by_group[gid].add(h.id)
        for g in self.groups:
            if g.members - known:
                raise ValueError(f"group {g.id} has unknown members")
            if set(g.members) != by_group[g.id]:
                raise ValueError(f"group {g.id} membership disagrees with household group_ids")

    @cached_property
    def household_index(self) -> dict[str, int]:
        return {h.id: k for k, h in enumerate(self.households)}

    @cached_property
    def costs(self) -> np.ndarray:
        arr = np.array([p.cost for p in self.programs], dtype=float)
        arr.setflags(write=False)
        return arr

    @cached_property
    def coverage_matrix(self) -> np.ndarray:
        """Boolean (|programs|, |households|) incidence matrix."""
        mat = np.zeros((len(self.programs), len(self.households)), dtype=bool)
        idx = self.household_index
        for j, p in enumerate(self.programs):
            for hid in p.covers:
                mat[j, idx[hid]] = True
        mat.setflags(write=False)
        return mat

    @cached_property
    def group_indices(self) -> tuple[np.ndarray, ...]:
        """Per group, the sorted household positions of its members."""
        idx = self.household_index
        out = []
        for g in self.groups:
            arr = np.array(sorted(idx[m] for m in g.members), dtype=int)
            arr.setflags(write=False)
            out.append(arr)
        return tuple(out)


@dataclass(frozen=True)
class DeterministicStrategy:
    """A binary selection over the instance's programs, in program order."""

    selected: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "selected", tuple(int(v) for v in self.selected))
        if any(v not in (0, 1) for v in self.selected):
            raise ValueError("selection entries must be 0 or 1")

    @classmethod
    def from_ids(cls, instance: Instance, program_ids: Iterable[str]) -> "DeterministicStrategy":
        wanted = set(program_ids)
        unknown = wanted - {p.id for p in instance.programs}
        if unknown:
            raise ValueError(f"unknown program ids {sorted(unknown)}")
        return cls(tuple(1 if p.id in wanted else 0 for p in instance.programs))

    def selected_ids(self, instance: Instance) -> tuple[str, ...]:
        return tuple(p.id for p, v in zip(instance.programs, self.selected) if v)


@dataclass(frozen=True, eq=False)
class StrategyOutcome:
    """A realized strategy together with its cost, coverage, and equity."""

    strategy: DeterministicStrategy
    total_cost: float
    covered: frozenset[str]
    group_ratios: dict[str, float]
    equity: float


def normalize(
    instance: Instance, *, allow_small_budget: bool = False
) -> tuple[Instance, float]:
    """Rescale so the costliest program has cost 1.

    Divides every program cost, every defined household ride-hail cost, and
    the budget by the maximum program cost, returning the scaled instance and
    the scale factor (multiply scaled money by it to recover raw units).
    Rejects a normalized budget below 1 unless allow_small_budget is set,
    since the rounding guarantees assume max cost <= 1 <= B.
    """
    if not instance.programs:
        raise ValueError("cannot normalize an instance with no programs")
    scale = max(p.cost for p in instance.programs)
    if scale <= 0:
        raise ValueError("cannot normalize: max program cost is 0")
    new_budget = instance.budget / scale
    if new_budget < 1 and not allow_small_budget:
        raise BudgetTooSmallError(
            f"normalized budget {new_budget:.6g} < 1; pass allow_small_budget=True to proceed"
        )
    households = tuple(
        h if h.ride_hail_cost is None else replace(h, ride_hail_cost=h.ride_hail_cost / scale)
        for h in instance.households
    )
    programs = tuple(replace(p, cost=p.cost / scale) for p in instance.programs)
    return replace(instance, households=households, programs=programs, budget=new_budget), scale


def inject_ride_hailing(instance: Instance) -> Instance:
    """Append one virtual single-household program per household whose
    ride-hail cost is defined. Idempotent: households that already have a
    virtual program are skipped. Virtual ids use the reserved prefix
    'ride-hail:<household id>'."""
    existing = {
        next(iter(p.covers))
        for p in instance.programs
        if p.kind is ProgramKind.VIRTUAL_RIDE_HAIL
    }
    added = [
        Program(
            id=f"{VIRTUAL_PROGRAM_PREFIX}{h.id}",
            cost=h.ride_hail_cost,
            covers=frozenset((h.id,)),
            kind=ProgramKind.VIRTUAL_RIDE_HAIL,
        )
        for h in instance.households
        if h.ride_hail_cost is not None and h.id not in existing
    ]
    if not added:
        return instance
    return replace(instance, programs=instance.programs + tuple(added))


def evaluate(instance: Instance, strategy: DeterministicStrategy) -> StrategyOutcome:
    """Realize a strategy: covered set, per-group coverage ratios, and equity
    (the minimum group ratio; 1.0 when there are no groups). Feasibility is
    deliberately not enforced so exhaustive oracles can probe any point."""
    if len(strategy.selected) != len(instance.programs):
        raise ValueError(
            f"strategy length {len(strategy.selected)} != program count {len(instance.programs)}"
        )
    sel = np.array(strategy.selected, dtype=bool)
    total_cost = float(instance.costs[sel].sum())
    if sel.any():
        covered_mask = instance.coverage_matrix[sel].any(axis=0)
    else:
        covered_mask = np.zeros(len(instance.households), dtype=bool)
    covered = frozenset(h.id for h, c in zip(instance.households, covered_mask) if c)
    ratios: dict[str, float] = {}
    equity = 1.0
    for g, idx in zip(instance.groups, instance.group_indices):
        r = float(covered_mask[idx].mean())
        ratios[g.id] = r
        equity = min(equity, r)
    return StrategyOutcome(
        strategy=strategy,
        total_cost=total_cost,
        covered=covered,
        group_ratios=ratios,
        equity=equity,
    )


def is_feasible(instance: Instance, strategy: DeterministicStrategy, tol: float = 1e-9) -> bool:
    sel = np.array(strategy.selected, dtype=bool)
    return float(instance.costs[sel].sum()) <= instance.budget + tol


def derive_groups(households: Sequence[Household]) -> tuple[Group, ...]:
    """Build the group list implied by household group_ids, sorted by id."""
    members: dict[str, set[str]] = {}
    for h in households:
        for gid in h.group_ids:
            members.setdefault(gid, set()).add(h.id)
    return tuple(Group(id=gid, members=frozenset(members[gid])) for gid in sorted(members))
