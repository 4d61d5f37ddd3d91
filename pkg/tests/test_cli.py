import csv
import json

import pytest

from aeris import check_args, grid_points, main, parse_args, run_sweep
from models import __version__
from models.errors import InfeasibleError, ScenarioError
from models.scenario import SweepAxis


def read_table(path):
    with open(path, "r", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def small_validation(doc, **tolerances):
    doc["sim"]["trials"] = 20000
    doc["validate"] = {"heights": ["350 m"], "elements": [50], "sigmas": 4, "clt_allowance": 0.01, "capacity_rtol": 0.01}
    doc["validate"].update(tolerances)
    return doc


class TestArguments:
    def test_defaults(self):
        args = parse_args(["metrics"])
        assert args.command == "metrics"
        assert args.scenario == "default"
        assert args.grid is None
        assert args.log_level == "INFO"

    def test_repeated_grid(self):
        args = parse_args(["metrics", "--grid", "elements=20:40:20", "--grid", "height=100:200:100"])
        points = grid_points(tuple(SweepAxis.parse(g) for g in args.grid))
        assert points == [
            {"elements": 20, "height": 100.0},
            {"elements": 20, "height": 200.0},
            {"elements": 40, "height": 100.0},
            {"elements": 40, "height": 200.0},
        ]

    def test_no_axes_is_one_point(self):
        assert grid_points(()) == [{}]

    @pytest.mark.parametrize(
        "argv, message",
        [
            ([], "Specify a command"),
            (["train"], "Unknown command"),
            (["simulate", "--trials", "100"], "--trials"),
            (["metrics", "--workers", "0"], "--workers"),
            (["metrics", "--log_level", "LOUD"], "--log_level"),
            (["metrics", "--grid", "elements=20:40:20", "--grid", "elements=1:2:1"], "same variable"),
        ],
    )
    def test_check_args(self, argv, message):
        with pytest.raises(ValueError, match=message):
            check_args(parse_args(argv))

    def test_bad_arguments_exit_with_schema_status(self, tmp_path):
        assert main(parse_args(["simulate", "--trials", "10", "--out", str(tmp_path / "out")])) == 2


class TestCommands:
    def test_bad_unit_writes_nothing(self, scenario_doc, write_scenario, tmp_path):
        scenario_doc["radio"]["bandwidth"] = "5 parsec"
        out = tmp_path / "out"
        code = main(parse_args(["metrics", "--scenario", str(write_scenario(scenario_doc)), "--out", str(out)]))
        assert code == 2
        assert not out.exists()

    def test_bad_grid_point_writes_nothing(self, tmp_path):
        out = tmp_path / "out"
        assert main(parse_args(["metrics", "--grid", "height=50:150:50", "--out", str(out)])) == 2
        assert not out.exists()

    @pytest.mark.parametrize(
        "command, axis",
        [
            ("optimize", "distance=0:0:1"),
            ("metrics", "distance=2000:2000:1"),
            ("metrics", "elements=0:0:1"),
        ],
    )
    def test_degenerate_grid_point_exits_with_schema_status(self, tmp_path, command, axis):
        out = tmp_path / "out"
        assert main(parse_args([command, "--grid", axis, "--out", str(out), "--no_progress"])) == 2
        assert not out.exists()

    def test_model_value_error_exits_with_schema_status(self, tmp_path, monkeypatch):
        def reject(*args, **kwargs):
            raise ValueError("rejected parameter")

        monkeypatch.setattr("aeris.run_sweep", reject)
        assert main(parse_args(["metrics", "--out", str(tmp_path / "out")])) == 2

    def test_metrics_table(self, tmp_path):
        out = tmp_path / "out"
        assert main(parse_args(["metrics", "--grid", "elements=20:100:20", "--out", str(out), "--no_progress"])) == 0
        rows = read_table(out / "metrics.csv")
        assert list(rows[0])[:2] == ["elements", "mode"]
        assert list(rows[0])[-2:] == ["provenance", "version"]
        assert {row["version"] for row in rows} == {__version__}
        assert {row["provenance"] for row in rows} == {"closed_form", "bound"}
        irs = [float(row["outage"]) for row in rows if row["mode"] == "IRS" and row["provenance"] == "closed_form"]
        assert len(irs) == 5
        assert all(b <= a for a, b in zip(irs, irs[1:]))

        with open(out / "metrics.jsonl", "r", encoding="utf-8") as f:
            records = [json.loads(line) for line in f]
        assert len(records) == len(rows)
        assert records[0]["point"] == {"elements": 20}
        assert records[0]["command"] == "metrics"

    def test_simulate_is_reproducible(self, tmp_path):
        argv = ["simulate", "--grid", "elements=50:50:1", "--trials", "10000", "--seed", "7", "--no_progress"]
        assert main(parse_args(argv + ["--out", str(tmp_path / "a")])) == 0
        assert main(parse_args(argv + ["--out", str(tmp_path / "b")])) == 0
        for name in ("simulate.csv", "simulate.jsonl"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        rows = read_table(tmp_path / "a" / "simulate.csv")
        assert [row["mode"] for row in rows] == ["UAV", "IRS", "INT"]
        assert {row["provenance"] for row in rows} == {"simulated"}

    def test_select(self, tmp_path):
        out = tmp_path / "out"
        assert main(parse_args(["select", "--grid", "elements=50:50:1", "--out", str(out), "--no_progress"])) == 0
        rows = read_table(out / "select.csv")
        assert [row["rule"] for row in rows] == ["probability", "threshold", "power", "snr", "optimal_heights"]
        assert rows[3]["chosen"] == "INT"

    def test_validate_passes(self, scenario_doc, write_scenario, tmp_path):
        path = write_scenario(small_validation(scenario_doc))
        out = tmp_path / "out"
        assert main(parse_args(["validate", "--scenario", str(path), "--out", str(out), "--no_progress"])) == 0
        rows = read_table(out / "validate.csv")
        assert {row["passed"] for row in rows} == {"true"}
        assert {"outage", "jensen", "capacity", "selection", "int_product", "histogram"} <= {row["check"] for row in rows}

    def test_validate_is_reproducible(self, scenario_doc, write_scenario, tmp_path):
        path = write_scenario(small_validation(scenario_doc))
        argv = ["validate", "--scenario", str(path), "--seed", "3", "--no_progress"]
        assert main(parse_args(argv + ["--out", str(tmp_path / "a")])) == 0
        assert main(parse_args(argv + ["--out", str(tmp_path / "b")])) == 0
        for name in ("validate.csv", "validate.jsonl"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_histogram_tolerance_is_enforced(self, scenario_doc, write_scenario, tmp_path):
        path = write_scenario(small_validation(scenario_doc, histogram=0.0))
        out = tmp_path / "out"
        assert main(parse_args(["validate", "--scenario", str(path), "--out", str(out), "--no_progress"])) == 4
        failed = [row for row in read_table(out / "validate.csv") if row["passed"] == "false"]
        assert [row["check"] for row in failed] == ["histogram"]

    def test_validate_out_of_tolerance(self, scenario_doc, write_scenario, tmp_path):
        path = write_scenario(small_validation(scenario_doc, sigmas=0, clt_allowance=0, capacity_rtol=0))
        out = tmp_path / "out"
        assert main(parse_args(["validate", "--scenario", str(path), "--out", str(out), "--no_progress"])) == 4
        assert (out / "validate.csv").exists()

    def test_infeasible_rate(self, scenario_doc, write_scenario, tmp_path):
        scenario_doc["radio"]["threshold"] = "80 dB"
        path = write_scenario(scenario_doc)
        out = tmp_path / "out"
        code = main(parse_args(["optimize", "--scenario", str(path), "--grid", "elements=50:50:1", "--out", str(out), "--no_progress"]))
        assert code == 3
        rows = read_table(out / "optimize.csv")
        sizing = [row for row in rows if row["problem"] == "min_power_elements"]
        assert sizing[0]["feasible"] == "false"

    def test_optimize_reports_stop_and_rescaling(self, tmp_path):
        out = tmp_path / "out"
        argv = ["optimize", "--scenario", "reference", "--grid", "elements=50:50:1", "--out", str(out), "--no_progress"]
        assert main(parse_args(argv)) == 0
        rows = {row["problem"]: row for row in read_table(out / "optimize.csv")}
        assert rows["uav_height"]["sign_premise_restored"] == "true"
        assert rows["irs_height"]["sign_premise_restored"] == "false"
        for problem in ("irs_elements", "irs_height", "uav_height"):
            assert rows[problem]["stop"] in ("tolerance", "stalled", "regressed", "iteration_cap")

    def test_run_sweep_raises_after_writing(self, scenario_doc, write_scenario, tmp_path):
        scenario_doc["radio"]["threshold"] = "80 dB"
        path = write_scenario(scenario_doc)
        with pytest.raises(InfeasibleError):
            run_sweep(str(path), "optimize", out=str(tmp_path / "out"), grid=["elements=50:50:1"], progress=False)
        assert (tmp_path / "out" / "optimize.jsonl").exists()

    def test_run_sweep_rejects_unknown_scenario(self, tmp_path):
        with pytest.raises(ScenarioError):
            run_sweep(str(tmp_path / "missing.yaml"), "metrics", out=str(tmp_path / "out"))
