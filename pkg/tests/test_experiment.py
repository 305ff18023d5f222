import csv

import pytest

from transit_equity.experiment import (
    RESULTS_HEADER,
    ExperimentConfig,
    ExperimentReport,
    ReportRow,
    compare_scenarios,
    emit,
    run_experiment,
    write_trial_log,
)
from transit_equity.geo import CostParams, SyntheticCityParams
from transit_equity.instance_io import write_instance
from transit_equity.rounding import ras
from transit_equity.lp import build_lp, solve_lp
from transit_equity.model import normalize

TINY_CITY = SyntheticCityParams(n_households=400, grid_rows=6, grid_cols=6)


def tiny_config(**overrides) -> ExperimentConfig:
    base = dict(
        budgets=(3e6, 6e6),
        trials=40,
        seed=11,
        synthetic=TINY_CITY,
        route_count=4,
        cost_params=CostParams(rides_per_quarter=364),
        solver="highs",
    )
    base.update(overrides)
    return ExperimentConfig(**base)


@pytest.fixture(scope="module")
def report():
    return run_experiment(tiny_config())


class TestRunExperiment:
    def test_row_grid_is_complete(self, report):
        keys = {(r.budget, r.scenario, r.algorithm) for r in report.rows}
        assert len(keys) == 2 * 2 * 3
        assert len(report.rows) == 12

    def test_ci_brackets_mean(self, report):
        for r in report.rows:
            assert r.ci_low <= r.mean_equity <= r.ci_high

    def test_deterministic_algorithms_have_point_ci(self, report):
        for r in report.rows:
            if r.algorithm == "greedy":
                assert r.ci_low == r.mean_equity == r.ci_high

    def test_ratio_consistent_with_lp(self, report):
        for r in report.rows:
            assert r.approx_ratio == pytest.approx(r.mean_equity / r.lp_value, rel=1e-12)

    def test_deterministic_ratios_below_one(self, report):
        for r in report.rows:
            if r.algorithm == "greedy":
                assert r.approx_ratio <= 1.0 + 1e-7

    def test_randomized_ratio_within_ci_slack_of_one(self, report):
        for r in report.rows:
            if r.algorithm in ("ras", "uniform"):
                slack = (r.ci_high - r.ci_low) / max(r.lp_value, 1e-12)
                assert r.approx_ratio <= 1.0 + slack + 1e-7

    def test_ras_cost_bounds(self, report):
        for r in report.rows:
            if r.algorithm != "ras":
                continue
            scale = r.budget / r.budget_normalized
            assert r.max_cost <= r.budget + scale * (1.0 + 1e-9)

    def test_lp_value_monotone_in_budget(self, report):
        for scenario in ("bus_only", "combined"):
            values = [r.lp_value for r in report.rows if r.scenario == scenario]
            by_budget = sorted(
                {(r.budget, r.lp_value) for r in report.rows if r.scenario == scenario}
            )
            assert all(b[1] >= a[1] - 1e-9 for a, b in zip(by_budget, by_budget[1:]))

    def test_same_seed_reproduces_report(self):
        a = run_experiment(tiny_config())
        b = run_experiment(tiny_config())
        assert a == b

    def test_different_seed_changes_monte_carlo(self):
        a = run_experiment(tiny_config())
        b = run_experiment(tiny_config(seed=12))
        a_ras = [r.mean_equity for r in a.rows if r.algorithm == "uniform"]
        b_ras = [r.mean_equity for r in b.rows if r.algorithm == "uniform"]
        assert a_ras != b_ras

    def test_instance_dir_source(self, tmp_path, singletons):
        write_instance(singletons, tmp_path / "inst")
        config = ExperimentConfig(
            budgets=(1.0,),
            trials=200,
            seed=3,
            instance_dir=str(tmp_path / "inst"),
            scenarios=("bus_only",),
            solver="simplex",
        )
        report = run_experiment(config)
        ras_row = next(r for r in report.rows if r.algorithm == "ras")
        assert ras_row.lp_value == pytest.approx(0.5, abs=1e-7)
        # worst-group mean over trials estimates the randomized objective 1/2
        assert ras_row.mean_equity == pytest.approx(0.5, abs=0.1)
        greedy_row = next(r for r in report.rows if r.algorithm == "greedy")
        assert greedy_row.mean_equity == 0.0
        assert greedy_row.approx_ratio == 0.0

    def test_config_validation(self):
        with pytest.raises(ValueError, match="budgets"):
            ExperimentConfig(budgets=())
        with pytest.raises(ValueError, match="trials"):
            ExperimentConfig(budgets=(1.0,), trials=0)
        with pytest.raises(ValueError, match="scenarios"):
            ExperimentConfig(budgets=(1.0,), scenarios=("bogus",))


class TestCompareScenarios:
    def test_deltas_per_budget_and_algorithm(self, report):
        deltas = compare_scenarios(report)
        assert len(deltas) == 2 * 3
        budgets = {d[0] for d in deltas}
        assert budgets == {3e6, 6e6}

    def test_ride_hailing_helps_at_small_budget(self, report):
        # qualitative: adding the ride-hail program raises worst-group
        # coverage when the budget is tight (stable for the seeded fixture)
        deltas = compare_scenarios(report)
        smallest = min(d[0] for d in deltas)
        for budget, algorithm, delta in deltas:
            if budget == smallest and algorithm == "ras":
                assert delta > 0.0

    def test_identical_scenarios_zero_delta(self, report):
        rows = []
        for r in report.rows:
            if r.scenario == "bus_only":
                rows.append(r)
                rows.append(
                    ReportRow(**{**r.__dict__, "scenario": "combined"})
                )
        mirrored = ExperimentReport(rows=tuple(rows))
        assert all(d[2] == 0.0 for d in compare_scenarios(mirrored))

    def test_missing_scenario_rejected(self, report):
        only_bus = ExperimentReport(
            rows=tuple(r for r in report.rows if r.scenario == "bus_only")
        )
        with pytest.raises(ValueError, match="both scenarios"):
            compare_scenarios(only_bus)


class TestEmit:
    def test_csv_schema(self, report, tmp_path):
        results, plot = emit(report, tmp_path)
        with results.open() as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == RESULTS_HEADER
        assert len(rows) == 1 + len(report.rows)

    def test_empty_report_header_only(self, tmp_path):
        results, _ = emit(ExperimentReport(rows=()), tmp_path)
        with results.open() as fh:
            rows = list(csv.reader(fh))
        assert rows == [RESULTS_HEADER]

    def test_emit_is_byte_deterministic(self, report, tmp_path):
        r1, p1 = emit(report, tmp_path / "one")
        r2, p2 = emit(report, tmp_path / "two")
        assert r1.read_bytes() == r2.read_bytes()
        assert p1.read_bytes() == p2.read_bytes()

    def test_plot_data_series(self, report, tmp_path):
        import json

        _, plot = emit(report, tmp_path)
        payload = json.loads(plot.read_text())
        assert payload["schema_version"] == 1
        assert len(payload["series"]) == 2 * 3
        series = payload["series"][0]
        assert series["budget"] == [3e6, 6e6]
        assert "budget_normalized" in series and "lp_value" in series


def test_trial_log_schema(tmp_path, singletons):
    norm, _ = normalize(singletons)
    sol = solve_lp(build_lp(norm))
    outcomes = [ras(norm, sol, seed) for seed in range(5)]
    path = tmp_path / "log.csv"
    write_trial_log(norm, outcomes, path)
    with path.open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["trial", "selected", "cost", "equity"]
    assert len(rows) == 6
    assert rows[1][1] in ("ride-hail:a", "ride-hail:b")
