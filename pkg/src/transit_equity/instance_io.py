"""Instance file format: a directory holding three CSV files.

households.csv: id, ride_hail_cost, group_ids   (group ids ';'-separated,
                ride_hail_cost empty when undefined)
programs.csv:   id, cost, kind, covers          (household ids ';'-separated)
meta.csv:       budget                          (single data row)

Column names are fixed; readers reject files whose header does not match
exactly, which doubles as the format version check. Groups are derived from
the household group_ids column.
"""

from __future__ import annotations

import csv
from pathlib import Path

from .model import Household, Instance, Program, ProgramKind, derive_groups

HOUSEHOLD_COLUMNS = ["id", "ride_hail_cost", "group_ids"]
PROGRAM_COLUMNS = ["id", "cost", "kind", "covers"]
META_COLUMNS = ["budget"]


def _read_rows(path: Path, columns: list[str]) -> list[dict[str, str]]:
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != columns:
            raise ValueError(
                f"{path}: expected header {columns}, found {reader.fieldnames}"
            )
        return list(reader)


def read_instance(directory: str | Path) -> Instance:
    directory = Path(directory)
    households = []
    for row in _read_rows(directory / "households.csv", HOUSEHOLD_COLUMNS):
        raw_cost = row["ride_hail_cost"].strip()
        gids = frozenset(g for g in row["group_ids"].split(";") if g)
        households.append(
            Household(
                id=row["id"],
                ride_hail_cost=float(raw_cost) if raw_cost else None,
                group_ids=gids,
            )
        )
    programs = []
    for row in _read_rows(directory / "programs.csv", PROGRAM_COLUMNS):
        programs.append(
            Program(
                id=row["id"],
                cost=float(row["cost"]),
                covers=frozenset(h for h in row["covers"].split(";") if h),
                kind=ProgramKind(row["kind"]),
            )
        )
    meta = _read_rows(directory / "meta.csv", META_COLUMNS)
    if len(meta) != 1:
        raise ValueError(f"{directory / 'meta.csv'}: expected exactly one data row")
    budget = float(meta[0]["budget"])
    return Instance(
        households=tuple(households),
        programs=tuple(programs),
        budget=budget,
        groups=derive_groups(households),
    )


def write_instance(instance: Instance, directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with (directory / "households.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(HOUSEHOLD_COLUMNS)
        for h in instance.households:
            cost = "" if h.ride_hail_cost is None else repr(float(h.ride_hail_cost))
            writer.writerow([h.id, cost, ";".join(sorted(h.group_ids))])
    with (directory / "programs.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PROGRAM_COLUMNS)
        for p in instance.programs:
            writer.writerow(
                [p.id, repr(float(p.cost)), p.kind.value, ";".join(sorted(p.covers))]
            )
    with (directory / "meta.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(META_COLUMNS)
        writer.writerow([repr(float(instance.budget))])
