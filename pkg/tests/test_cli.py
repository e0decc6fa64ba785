import json

import pytest

from depthscreen.cli import EXIT_CONFIG, EXIT_INPUT, EXIT_OK, main

SPEC = {
    "n_scenarios": 40,
    "n_hours": 24,
    "days": ["2018-06-04", "2018-12-27"],
    "aggregate_grid": True,
    "entities": {
        "north_central": {
            "load": {"profile": {"base": 20000, "amplitude": 4000}, "sigma": 900},
            "solar": {"profile": {"solar_peak": 3000}, "sigma": 400},
            "wind": {"profile": {"base": 2500, "amplitude": 500, "peak_hour": 3}, "sigma": 500},
        },
        "far_west": {
            "load": {"profile": {"base": 15000, "amplitude": 3000}, "sigma": 700},
            "solar": {"profile": {"solar_peak": 2500}, "sigma": 300},
            "wind": {"profile": {"base": 3500, "amplitude": 800, "peak_hour": 2}, "sigma": 600},
        },
    },
    "link": {"metric": "cost", "kind": "affine"},
}

CONFIG = {
    "target": "cost",
    "preset": "cost",
    "n2": {"kind": "fixed", "n2": 9},
    "label_rule": {"kind": "top_m", "m": 6},
}


@pytest.fixture
def workdir(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps(SPEC))
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(CONFIG))
    return tmp_path


def run(args):
    return main([str(a) for a in args])


class TestSynth:
    def test_writes_scenarios_and_outcomes(self, workdir):
        code = run(["synth", "--spec", workdir / "spec.json", "--seed", "7",
                    "--out", workdir / "scen.csv", "--outcomes", workdir / "oc.csv"])
        assert code == EXIT_OK
        assert (workdir / "scen.csv").exists() and (workdir / "oc.csv").exists()

    def test_deterministic_bytes(self, workdir):
        for name in ("a", "b"):
            assert run(["synth", "--spec", workdir / "spec.json", "--seed", "3",
                        "--out", workdir / f"{name}.csv"]) == EXIT_OK
        assert (workdir / "a.csv").read_bytes() == (workdir / "b.csv").read_bytes()

    def test_missing_spec_is_input_error(self, workdir):
        assert run(["synth", "--spec", workdir / "nope.json",
                    "--out", workdir / "x.csv"]) == EXIT_INPUT


@pytest.fixture
def generated(workdir):
    run(["synth", "--spec", workdir / "spec.json", "--seed", "7",
         "--out", workdir / "scen.csv", "--outcomes", workdir / "oc.csv"])
    return workdir


class TestDepth:
    def test_scores_per_day(self, generated):
        out = generated / "depth.json"
        code = run(["depth", "--scenarios", generated / "scen.csv", "--metric", "exd",
                    "--entity", "grid", "--facet", "net_load", "--out", out])
        assert code == EXIT_OK
        doc = json.loads(out.read_text())
        assert doc["metric"] == "EXD"
        assert len(doc["days"]) == 2
        assert len(doc["days"][0]["scores"]) == 40

    def test_unknown_metric_is_config_error(self, generated):
        assert run(["depth", "--scenarios", generated / "scen.csv", "--metric", "zzz",
                    "--out", generated / "x.json"]) == EXIT_CONFIG

    def test_one_sided_lid_rejected(self, generated):
        assert run(["depth", "--scenarios", generated / "scen.csv", "--metric", "lid",
                    "--one-sided", "--out", generated / "x.json"]) == EXIT_CONFIG


class TestScreen:
    def test_with_config_file(self, generated):
        out = generated / "sel.json"
        code = run(["screen", "--scenarios", generated / "scen.csv",
                    "--config", generated / "cfg.json", "--out", out])
        assert code == EXIT_OK
        doc = json.loads(out.read_text())
        assert doc["schema"] == "depthscreen.selection.v1"
        assert len(doc["days"][0]["indices"]) == 9
        assert len(doc["days"][0]["outlyingness_scores"]) == 9

    def test_preset_name_accepted_but_infeasible_at_desk_scale(self, generated):
        assert run(["screen", "--scenarios", generated / "scen.csv",
                    "--config", "rs", "--out", generated / "x.json"]) == EXIT_CONFIG

    def test_unknown_config_is_config_error(self, generated):
        assert run(["screen", "--scenarios", generated / "scen.csv",
                    "--config", "not-a-preset", "--out", generated / "x.json"]) == EXIT_CONFIG

    def test_schema_error_is_input_error(self, generated):
        bad = generated / "bad.csv"
        bad.write_text("day,scenario\n")
        assert run(["screen", "--scenarios", bad, "--config", generated / "cfg.json",
                    "--out", generated / "x.json"]) == EXIT_INPUT


class TestEval:
    def test_json_report(self, generated):
        out = generated / "ev.json"
        code = run(["eval", "--scenarios", generated / "scen.csv",
                    "--outcomes", generated / "oc.csv",
                    "--config", generated / "cfg.json", "--out", out])
        assert code == EXIT_OK
        doc = json.loads(out.read_text())
        assert doc["label_rule"] == {"kind": "top_m", "m": 6}
        assert list(doc["metrics"]) == ["AUC"]
        summary = doc["metrics"]["AUC"]["summary"]
        assert summary["count_accuracy"]["min"] == 1.0  # affine link, AUC selection

    def test_csv_report(self, generated):
        out = generated / "ev.csv"
        code = run(["eval", "--scenarios", generated / "scen.csv",
                    "--outcomes", generated / "oc.csv",
                    "--config", generated / "cfg.json", "--format", "csv", "--out", out])
        assert code == EXIT_OK
        assert out.read_text().splitlines()[0] == "statistic,AUC"

    def test_metric_sweep_with_depth_config(self, generated):
        cfg = generated / "depthcfg.json"
        cfg.write_text(json.dumps({
            "preset": "rs", "n1": 30, "n2": {"kind": "fixed", "n2": 12},
            "target": "cost", "label_rule": {"kind": "top_m", "m": 8},
        }))
        out = generated / "ev2.csv"
        code = run(["eval", "--scenarios", generated / "scen.csv",
                    "--outcomes", generated / "oc.csv",
                    "--config", cfg, "--format", "csv", "--out", out])
        assert code == EXIT_OK
        assert out.read_text().splitlines()[0] == "statistic,ID,MBD,EXD,ERD,LID,HMD,DQ,RTD"

    def test_byte_identical_across_runs_and_threads(self, generated):
        outputs = []
        for name, threads in (("r1.json", "1"), ("r2.json", "1"), ("r4.json", "4")):
            out = generated / name
            assert run(["eval", "--scenarios", generated / "scen.csv",
                        "--outcomes", generated / "oc.csv",
                        "--config", generated / "cfg.json",
                        "--threads", threads, "--out", out]) == EXIT_OK
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1] == outputs[2]


class TestUsage:
    def test_usage_error_is_input_error(self):
        assert main(["depth"]) == EXIT_INPUT

    def test_unknown_command(self):
        assert main(["frobnicate"]) == EXIT_INPUT
