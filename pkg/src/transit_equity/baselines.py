"""Experimental baselines: equity-greedy selection and uniform random selection.

Both stop when every household is covered or no remaining program fits the
leftover budget, and both always stay within budget (unlike the randomized
rounding strategy, which may overflow by at most one normalized cost unit).
"""

from __future__ import annotations

import numpy as np

from .model import DeterministicStrategy, Instance, StrategyOutcome, evaluate


def _incidence(instance: Instance) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Per household: the programs covering it and the groups containing it."""
    coverers: list[list[int]] = [[] for _ in instance.households]
    idx = instance.household_index
    for j, p in enumerate(instance.programs):
        for hid in p.covers:
            coverers[idx[hid]].append(j)
    group_of: list[list[int]] = [[] for _ in instance.households]
    for g, members in enumerate(instance.group_indices):
        for i in members:
            group_of[int(i)].append(g)
    return (
        [np.array(c, dtype=int) for c in coverers],
        [np.array(g, dtype=int) for g in group_of],
    )


def greedy(instance: Instance) -> StrategyOutcome:
    """Repeatedly select the affordable program with the largest equity gain.

    Ties are broken by larger newly-covered household count, then lower cost,
    then lexicographically smallest program id, making the result fully
    deterministic. Programs too expensive for the remaining budget are
    skipped, not terminal.
    """
    n_j = len(instance.programs)
    n_i = len(instance.households)
    costs = instance.costs
    coverers, group_of = _incidence(instance)
    group_sizes = np.array([len(m) for m in instance.group_indices], dtype=float)
    n_groups = len(instance.groups)
    id_rank = np.empty(n_j, dtype=int)
    id_rank[np.argsort([p.id for p in instance.programs], kind="stable")] = np.arange(n_j)

    # uncovered[j, g]: members of g that j would newly cover; fresh[j]: newly
    # covered households overall. Both maintained incrementally as coverage grows.
    uncovered = np.zeros((n_j, max(1, n_groups)))
    fresh = np.zeros(n_j)
    for i in range(n_i):
        for j in coverers[i]:
            fresh[j] += 1.0
            uncovered[j, group_of[i]] += 1.0
    covered_count = np.zeros(max(1, n_groups))

    selected = np.zeros(n_j, dtype=bool)
    covered = np.zeros(n_i, dtype=bool)
    remaining = float(instance.budget)

    while not covered.all():
        affordable = ~selected & (costs <= remaining + 1e-12)
        if not affordable.any():
            break
        if n_groups:
            new_equity = ((covered_count + uncovered) / group_sizes).min(axis=1)
        else:
            new_equity = np.ones(n_j)
        candidates = np.flatnonzero(affordable)
        order = np.lexsort(
            (id_rank[candidates], costs[candidates], -fresh[candidates], -new_equity[candidates])
        )
        pick = int(candidates[order[0]])
        selected[pick] = True
        remaining -= float(costs[pick])
        for i in np.flatnonzero(instance.coverage_matrix[pick] & ~covered):
            covered[i] = True
            for j in coverers[i]:
                fresh[j] -= 1.0
                uncovered[j, group_of[i]] -= 1.0
            covered_count[group_of[i]] += 1.0

    return evaluate(instance, DeterministicStrategy(tuple(int(v) for v in selected)))


def uniform(instance: Instance, rng: int | np.random.Generator) -> StrategyOutcome:
    """Repeatedly pick uniformly at random among the not-yet-selected programs
    that still fit the remaining budget. Reproducible given an integer seed.

    Once a program becomes unaffordable it stays so (the remaining budget only
    shrinks), so the candidate pool is filtered lazily: a full pass happens
    only when the budget drops below the costliest survivor.
    """
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(int(rng))
    n_j = len(instance.programs)
    n_i = len(instance.households)
    costs = instance.costs
    cover_idx = [np.flatnonzero(row) for row in instance.coverage_matrix]

    alive = np.arange(n_j)
    max_alive = float(costs.max(initial=0.0))
    selected = np.zeros(n_j, dtype=bool)
    covered = np.zeros(n_i, dtype=bool)
    n_covered = 0
    remaining = float(instance.budget)

    while alive.size and n_covered < n_i:
        if max_alive > remaining + 1e-12:
            alive = alive[costs[alive] <= remaining + 1e-12]
            if alive.size == 0:
                break
            max_alive = float(costs[alive].max())
        r = int(rng.integers(alive.size))
        pick = int(alive[r])
        alive[r] = alive[-1]
        alive = alive[:-1]
        selected[pick] = True
        remaining -= float(costs[pick])
        idx = cover_idx[pick]
        fresh = idx[~covered[idx]]
        covered[fresh] = True
        n_covered += fresh.size

    return evaluate(instance, DeterministicStrategy(tuple(int(v) for v in selected)))
