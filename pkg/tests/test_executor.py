import json
import os

import pandas as pd
import pytest
import yaml

from oprouting.exceptions import ConfigError
from oprouting.executor import EXIT_OK, EXIT_USAGE, load_config
from oprouting.scripts.run import main

LOG = ["--log_config", "oprouting/logging_test.conf"]

SMALL_VERIFY = {"verify": {"max_relays": 3,
                           "k_values": [2.0, 3.0],
                           "suites": ["cone-uniqueness", "lyapunov", "orcd-solver", "capacity"],
                           "samples": {"cone-uniqueness": 20, "lyapunov": 10, "orcd-solver": 10, "capacity": 5,
                                       "refinement-orcd": 10, "pc-models": 1}}}


def _run(capsys, *argv):
    code = main(list(argv) + LOG)
    return code, capsys.readouterr()


def _write_yaml(path, cfg):
    with open(path, "w") as fh:
        yaml.safe_dump(cfg, fh)
    return str(path)


class TestResolve:

    def test_boundary_example(self, capsys):
        code, captured = _run(capsys, "resolve", "--q", "1,3")
        assert code == EXIT_OK
        out = json.loads(captured.out)
        assert out["ordering"] == [[1], [2]]
        assert out["on_boundary"] is True
        assert out["lyapunov_value"] == pytest.approx(2.0)

    def test_path_connected(self, capsys):
        code, captured = _run(capsys, "resolve", "--q", "5,0.1", "--path_connected", "--network", "chain",
                              "--n_relays", "2")
        assert code == EXIT_OK
        assert 1 in json.loads(captured.out)["ordering"][0]

    @pytest.mark.parametrize("q", ["a,b", "1,-2", ""])
    def test_bad_backlog(self, capsys, q):
        code, captured = _run(capsys, "resolve", "--q", q)
        assert code == EXIT_USAGE
        assert "error:" in captured.err

    def test_length_mismatch_with_network(self, capsys):
        code, _ = _run(capsys, "resolve", "--q", "1,2", "--path_connected")
        assert code == EXIT_USAGE

    def test_missing_argument(self, capsys):
        code, _ = _run(capsys, "resolve")
        assert code == 2


class TestSimulate:

    def test_deterministic(self, capsys, tmp_path):
        argv = ["simulate", "--lambda", "0.1,0.05,0.1", "--horizon", "500", "--seed", "3", "--policy", "orcd"]
        assert _run(capsys, *argv, "--out", str(tmp_path / "a"))[0] == EXIT_OK
        assert _run(capsys, *argv, "--out", str(tmp_path / "b"))[0] == EXIT_OK
        with open(tmp_path / "a" / "summary.json") as fh:
            a = json.load(fh)
        with open(tmp_path / "b" / "summary.json") as fh:
            b = json.load(fh)
        assert a == b
        assert a["policy"] == "orcd"
        assert a["arrival_rates"] == [0.1, 0.05, 0.1]

    def test_zero_arrivals_and_trace(self, capsys, tmp_path):
        trace = tmp_path / "trace.csv"
        code, captured = _run(capsys, "simulate", "--lambda", "0,0,0", "--horizon", "50", "--out", str(tmp_path),
                              "--trace-out", str(trace))
        assert code == EXIT_OK
        out = json.loads(captured.out)
        assert out["delivered"] == 0
        assert out["mean_delay"] is None
        frame = pd.read_csv(trace)
        assert list(frame.columns) == ["slot", "node", "backlog", "arrivals"]
        assert len(frame) == 51 * 3

    def test_bad_policy(self, capsys, tmp_path):
        code, _ = _run(capsys, "simulate", "--policy", "nope", "--horizon", "10", "--out", str(tmp_path))
        assert code == EXIT_USAGE

    def test_bad_rates(self, capsys, tmp_path):
        code, _ = _run(capsys, "simulate", "--lambda", "0.1", "--horizon", "10", "--out", str(tmp_path))
        assert code == EXIT_USAGE


class TestCapacity:

    def test_single_relay(self, capsys):
        code, captured = _run(capsys, "capacity", "--network", "single-relay", "--lambda", "0.4", "--direction", "1",
                              "--witness")
        assert code == EXIT_OK
        out = json.loads(captured.out)
        assert out["feasible"] is True
        assert out["slack"] == pytest.approx(0.1)
        assert out["theta_star"] == pytest.approx(0.5, abs=1e-6)
        assert out["witness"]

    def test_scipy_solver(self, capsys):
        code, captured = _run(capsys, "capacity", "--network", "chain", "--n_relays", "2", "--lambda", "0.3,0.3",
                              "--solver", "scipy")
        assert code == EXIT_OK
        out = json.loads(captured.out)
        assert out["feasible"] is False
        assert out["theta_star"] == pytest.approx(0.25 / 0.3, abs=1e-6)


class TestVerify:

    def test_small_suites_pass(self, capsys, tmp_path):
        config = _write_yaml(tmp_path / "verify.yaml", SMALL_VERIFY)
        report = tmp_path / "report.json"
        code, captured = _run(capsys, "verify", "--config", config, "--report", str(report))
        assert code == EXIT_OK
        assert "VERIFICATION" in captured.err
        with open(report) as fh:
            payload = json.load(fh)
        assert payload["passed"] is True
        assert [s["name"] for s in payload["suites"]] == SMALL_VERIFY["verify"]["suites"]

    def test_broken_weight_is_expected_to_fail(self, capsys, tmp_path):
        config = _write_yaml(tmp_path / "verify.yaml", SMALL_VERIFY)
        code, captured = _run(capsys, "verify", "--config", config, "--suites", "cone-uniqueness", "--broken-weight",
                              "--k_values", "3")
        assert code == EXIT_OK
        suite = json.loads(captured.out)["suites"][0]
        assert suite["expected_fail"] is True

    def test_small_orcd_weight_is_expected_to_fail(self, capsys, tmp_path):
        config = _write_yaml(tmp_path / "verify.yaml", SMALL_VERIFY)
        code, captured = _run(capsys, "verify", "--config", config, "--suites", "refinement-orcd", "--orcd_K", "2")
        assert code == EXIT_OK
        suite = json.loads(captured.out)["suites"][0]
        assert suite["expected_fail"] is True
        assert suite["details"]["ratio_bound_violated"]


class TestSweep:

    def test_grid_shares_arrivals(self, capsys, tmp_path):
        config = _write_yaml(tmp_path / "sweep.yaml", {
            "simulation": {"horizon": 300, "trace": True},
            "arrivals": {"kind": "bernoulli", "direction": [1.0, 1.0, 1.0]},
            "sweep": {"policies": ["backpressure", "orcd"], "scales": [0.5], "seeds": [0, 1], "relative": True}})
        out_dir = tmp_path / "grid"
        code, _ = _run(capsys, "sweep", "--config", config, "--out", str(out_dir))
        assert code == EXIT_OK
        table = pd.read_csv(out_dir / "sweep.csv")
        assert len(table) == 4
        assert list(table["policy"]) == ["backpressure", "backpressure", "orcd", "orcd"]
        first = pd.read_csv(out_dir / "point_0000" / "trace.csv")
        third = pd.read_csv(out_dir / "point_0002" / "trace.csv")
        assert (first["arrivals"] == third["arrivals"]).all()
        assert os.path.exists(out_dir / "point_0003" / "summary.json")

    def test_missing_scales(self, capsys, tmp_path):
        code, _ = _run(capsys, "sweep", "--policies", "orcd", "--out", str(tmp_path))
        assert code == EXIT_USAGE


class TestLoadConfig:

    def test_none_and_empty(self, tmp_path):
        assert load_config(None) == {}
        empty = tmp_path / "empty.yaml"
        empty.write_text("")
        assert load_config(str(empty)) == {}

    @pytest.mark.parametrize("text", ["- a\n- b\n", "a: [1, 2\n"])
    def test_invalid(self, tmp_path, text):
        path = tmp_path / "bad.yaml"
        path.write_text(text)
        with pytest.raises(ConfigError):
            load_config(str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(str(tmp_path / "missing.yaml"))
