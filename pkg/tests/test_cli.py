import json
import math
import subprocess
import sys

import pytest

from pathorder import __version__
from pathorder.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main
from pathorder.io import canonical_hash

PIPELINE = {
    "command": "pipeline",
    "system": {"map": "standard", "params": {"K": 6.0}, "dt": 1.0},
    "partition": {"resolution": [16, 16]},
    "source": 0,
    "target": 17,
    "L": 2000,
    "horizon": 50,
    "seed": 42,
}


@pytest.fixture
def write(tmp_path):
    def _write(cfg, name="cfg.json"):
        path = tmp_path / name
        path.write_text(json.dumps(cfg))
        return str(path)
    return _write


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(argv, capsys):
    code, out, err = run(argv, capsys)
    assert code == EXIT_OK, err
    return json.loads(out)


class TestPipeline:
    def test_byte_identical_reports(self, write, tmp_path, capsys):
        cfg = write(PIPELINE)
        a, b = tmp_path / "a", tmp_path / "b"
        assert run(["pipeline", "--config", cfg, "--out", str(a)], capsys)[0] == EXIT_OK
        assert run(["pipeline", "--config", cfg, "--out", str(b)], capsys)[0] == EXIT_OK
        for name in ("report.json", "paths.csv", "path_probabilities.svg"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_report_contents(self, write, capsys):
        rep = run_json(["pipeline", "--config", write(PIPELINE)], capsys)
        assert rep["version"] == __version__
        assert rep["seed"] == 42
        assert len(rep["config_hash"]) == 64
        assert abs(rep["partition_identity"] - math.e) <= 1e-10
        assert rep["n_paths"] > 1
        p = rep["distribution"]["probabilities"]
        assert rep["greatest_path"] == [k for k, v in enumerate(p) if v == max(p)]
        assert rep["entropy_generation"] > 0

    def test_seed_override_changes_hash_and_result(self, write, capsys):
        cfg = write(PIPELINE)
        base = run_json(["pipeline", "--config", cfg], capsys)
        other = run_json(["pipeline", "--config", cfg, "--seed", "7"], capsys)
        assert other["seed"] == 7
        assert other["config_hash"] != base["config_hash"]
        assert other["ensemble"]["counts"] != base["ensemble"]["counts"]

    def test_config_hash_is_of_effective_config(self, write, capsys):
        rep = run_json(["pipeline", "--config", write(PIPELINE)], capsys)
        assert rep["config_hash"] == canonical_hash(PIPELINE)

    def test_csv_format(self, write, capsys):
        code, out, _ = run(["pipeline", "--config", write(PIPELINE), "--format", "csv"], capsys)
        assert code == EXIT_OK
        lines = out.splitlines()
        assert lines[0] == "rank,signature,count,probability,travel_time,action"
        assert sum(int(r.split(",")[2]) for r in lines[1:]) > 0

    def test_workers_do_not_change_report(self, write, capsys):
        one = run_json(["pipeline", "--config", write(PIPELINE)], capsys)
        four = run_json(["pipeline", "--config", write({**PIPELINE, "workers": 4})], capsys)
        assert one["ensemble"] == four["ensemble"]


class TestSimulate:
    def test_single_replica(self, write, capsys):
        cfg = {"system": {"map": "doubling"}, "partition": {"resolution": [2, 1]},
               "source": 0, "target": 1, "L": 1, "horizon": 60, "seed": 3}
        rep = run_json(["simulate", "--config", write(cfg)], capsys)
        assert rep["n_paths"] == 1
        assert rep["distribution"]["probabilities"] == [1.0]
        assert rep["entropy_generation"] == 0.0
        assert "partition_identity" not in rep

    def test_no_resolved_paths_is_runtime_error(self, write, capsys):
        # K = 0 keeps p fixed; a one-step horizon cannot cross half the torus
        cfg = {**PIPELINE, "command": "simulate",
               "system": {"map": "standard", "params": {"K": 0.0}},
               "target": 8 * 16, "horizon": 1, "L": 10}
        code, _, err = run(["simulate", "--config", write(cfg)], capsys)
        assert code == EXIT_RUNTIME
        assert "unresolved" in err

    def test_svg_optional(self, write, tmp_path, capsys):
        out = tmp_path / "o"
        cfg = {**PIPELINE, "command": "simulate", "svg": True, "L": 100}
        assert run(["simulate", "--config", write(cfg), "--out", str(out)], capsys)[0] == 0
        assert (out / "path_probabilities.svg").read_text().startswith("<svg")


class TestOtherCommands:
    def test_maxent(self, write, capsys):
        rep = run_json(["maxent", "--config", write({"seed": 0, "actions": [0, 1, 2],
                                                     "target_mean": 0.8})], capsys)
        assert abs(rep["mean_action"] - 0.8) <= 1e-8
        assert rep["eta"] == pytest.approx(0.30462, abs=1e-5)
        assert rep["identity_sum"] == pytest.approx(math.e, abs=1e-10)

    def test_maxent_csv(self, write, capsys):
        code, out, _ = run(["maxent", "--config", write({"seed": 0, "actions": [1, 1],
                                                         "target_mean": 1}), "--format", "csv"],
                           capsys)
        assert code == 0
        assert out.splitlines() == ["k,action,probability", "0,1,0.5", "1,1,0.5"]

    def test_maxent_infeasible_is_runtime_error(self, write, capsys):
        code, _, err = run(["maxent", "--config", write({"seed": 0, "actions": [0, 1],
                                                         "target_mean": 5})], capsys)
        assert code == EXIT_RUNTIME
        assert "InfeasibleTargetError" in err

    def test_entropy_account(self, write, capsys):
        rep = run_json(["entropy", "--config", write({"seed": 0, "account": {"T_r": 1, "T_a": 1}})],
                       capsys)
        assert rep["value"] == 0.0
        assert rep["form"] == "macroscopic"
        worked = {"seed": 0, "account": {"Q_r": 100, "T_r": 400, "T_a": 300}}
        rep = run_json(["entropy", "--config", write(worked)], capsys)
        assert rep["value"] == pytest.approx(1 / 12, abs=1e-10)

    def test_entropy_distribution_from_input_file(self, write, capsys):
        # keys from the input file are merged into the config
        write({"distribution": {"probabilities": [0.5, 0.5]}}, "dist.json")
        cfg = write({"seed": 0, "input": "dist.json"})
        rep = run_json(["entropy", "--config", cfg], capsys)
        assert rep["value"] == pytest.approx(math.log(2), abs=1e-15)
        assert rep["form"] == "statistical"

    def test_order_random_variables(self, write, capsys):
        cfg = {"seed": 0, "X": {"support": [0, 1], "probs": [0.7, 0.3]},
               "Y": {"support": [0, 1], "probs": [0.4, 0.6]}}
        rep = run_json(["order", "--config", write(cfg)], capsys)
        assert rep["verdict"] == "X<=Y"
        rows = rep["coupling"]["rows"]
        assert all(r["psi1"] <= r["psi2"] for r in rows)
        assert math.fsum(r["mass"] for r in rows) == pytest.approx(1.0, abs=1e-12)

    def test_order_incomparable_reports_witness(self, write, capsys):
        cfg = {"seed": 0, "X": {"support": [0, 3], "probs": [0.5, 0.5]},
               "Y": {"support": [1], "probs": [1]}}
        rep = run_json(["order", "--config", write(cfg)], capsys)
        assert rep["verdict"] == "incomparable"
        assert rep["coupling"] is None
        assert rep["witness"] == 1.0

    def test_order_paths(self, write, capsys):
        cfg = {"seed": 0, "distribution": {"probabilities": [0.7, 0.2, 0.1]}}
        rep = run_json(["order", "--config", write(cfg)], capsys)
        assert rep["greatest_path"] == [0]
        assert all(r["relation"] == r["gradient_relation"] for r in rep["pairs"])
        assert len(rep["pairs"]) == 3

    def test_ergodic(self, write, capsys):
        cfg = {"seed": 1, "system": {"map": "cat"}, "n": 20000, "samples": 20000}
        rep = run_json(["ergodic", "--config", write(cfg)], capsys)
        assert {r["observable"] for r in rep["observables"]} == {"x", "x2", "sin2pix"}
        assert all(r["within_bound"] for r in rep["observables"])


class TestErrors:
    @pytest.mark.parametrize("cfg", [
        {"actions": [0, 1], "target_mean": 0.5},                       # no seed
        {"seed": -1, "actions": [0, 1], "target_mean": 0.5},           # bad seed
        {"seed": 0},                                                   # nothing to do
        {"seed": 0, "actions": "x", "target_mean": 0.5},               # wrong type
    ])
    def test_bad_maxent_configs(self, cfg, write, capsys):
        code, out, err = run(["maxent", "--config", write(cfg)], capsys)
        assert code == EXIT_CONFIG
        assert out == ""
        assert err.startswith("config error")

    def test_missing_file(self, tmp_path, capsys):
        assert run(["maxent", "--config", str(tmp_path / "nope.json")], capsys)[0] == EXIT_CONFIG

    def test_invalid_json(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        assert run(["maxent", "--config", str(path)], capsys)[0] == EXIT_CONFIG

    def test_command_mismatch(self, write, capsys):
        assert run(["maxent", "--config", write(PIPELINE)], capsys)[0] == EXIT_CONFIG

    def test_missing_simulation_keys(self, write, capsys):
        cfg = {k: v for k, v in PIPELINE.items() if k != "horizon"}
        assert run(["pipeline", "--config", write(cfg)], capsys)[0] == EXIT_CONFIG

    def test_source_equals_target(self, write, capsys):
        assert run(["pipeline", "--config", write({**PIPELINE, "target": 0})], capsys)[0] \
            == EXIT_CONFIG

    def test_unknown_map_param(self, write, capsys):
        cfg = {**PIPELINE, "system": {"map": "cat", "params": {"K": 1.0}}}
        assert run(["pipeline", "--config", write(cfg)], capsys)[0] == EXIT_CONFIG

    def test_missing_input_file(self, write, capsys):
        cfg = write({"seed": 0, "input": "absent.json"})
        assert run(["entropy", "--config", cfg], capsys)[0] == EXIT_CONFIG

    def test_argparse_errors(self, capsys):
        assert run(["bogus"], capsys)[0] == EXIT_CONFIG
        assert run(["maxent"], capsys)[0] == EXIT_CONFIG


def test_console_entry_point(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 0, "account": {"T_r": 2, "T_a": 2}}))
    proc = subprocess.run([sys.executable, "-m", "pathorder.cli", "entropy", "--config", str(cfg)],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["value"] == 0.0
