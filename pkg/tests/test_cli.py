import csv
import json

import pytest

from cran_loadscale.cli import main
from cran_loadscale.network import NetworkInstance, save_instance

from conftest import assoc


def test_generate_then_solve(tmp_path, capsys):
    assert main(["generate", "--seed", "5", "--out", str(tmp_path / "g")]) == 0
    assert (tmp_path / "g" / "instance.scenario.json").exists()
    rc = main(["solve", str(tmp_path / "g" / "instance.json"), "--s-size", "40", "--seed", "5",
               "--trace", "--out", str(tmp_path / "s")])
    assert rc == 0
    doc = json.loads((tmp_path / "s" / "result.json").read_text())
    assert doc["converged"] and len(doc["target_set"]) == 40
    with open(tmp_path / "s" / "trace.csv") as fh:
        assert next(csv.reader(fh)) == ["k", "alpha", "residual", "H"]


def test_solve_single_ue_gadget(tmp_path):
    inst = NetworkInstance(power=[3.0], amp_gain=[[1.0]], noise_power=1.0, num_rbs=1, rb_bandwidth=1.0,
                           demand=[1.0])
    save_instance(tmp_path / "one.json", inst)  # no kappa: best-RRH association is used
    assert main(["solve", str(tmp_path / "one.json"), "--s-list", "0", "--epsilon", "1e-10",
                 "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "result.json").read_text())["alpha_star"] == pytest.approx(2.0)


def test_infeasible_exit_code(tmp_path):
    inst = NetworkInstance(power=[3.0], amp_gain=[[1.0]], noise_power=1.0, num_rbs=1, rb_bandwidth=1.0,
                           demand=[4.0])
    save_instance(tmp_path / "over.json", inst, assoc([[1]]))
    assert main(["solve", str(tmp_path / "over.json"), "--out", str(tmp_path)]) == 2
    doc = json.loads((tmp_path / "result.json").read_text())
    assert doc["infeasible"] and doc["alpha_star"] == pytest.approx(0.5, rel=1e-3)


def test_joint_writes_metrics(tmp_path):
    main(["generate", "--seed", "1", "--out", str(tmp_path)])
    rc = main(["joint", str(tmp_path / "instance.json"), "--s-size", "10", "--seed", "1", "--out", str(tmp_path)])
    assert rc == 0
    doc = json.loads((tmp_path / "joint.json").read_text())
    assert set(doc["metrics"]) == {"alpha_improvement_pct", "num_comp_ues",
                                   "delivered_demand_increase_pct", "num_comp_ues_in_S"}
    assert doc["alpha_star"] >= doc["baseline"]["alpha_star"] - 1e-3


def test_gadget(tmp_path):
    (tmp_path / "f.cnf").write_text("(1 2 -3)\n")
    assert main(["gadget", str(tmp_path / "f.cnf"), "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "gadget.json").read_text())
    assert (doc["n"], doc["m"]) == (5, 8)
    assert main(["solve", str(tmp_path / "gadget.json"), "--out", str(tmp_path)]) == 0


def test_errors_exit_one(tmp_path, capsys):
    assert main(["solve", str(tmp_path / "missing.json")]) == 1
    (tmp_path / "bad.cnf").write_text("1 2\n")
    assert main(["gadget", str(tmp_path / "bad.cnf"), "--out", str(tmp_path)]) == 1
    assert "three distinct literals" in capsys.readouterr().err


def test_nonconvergence_reports_trace_tail(tmp_path, capsys):
    main(["generate", "--seed", "2", "--out", str(tmp_path)])
    rc = main(["solve", str(tmp_path / "instance.json"), "--s-size", "10", "--max-iters", "3",
               "--out", str(tmp_path)])
    assert rc == 1
    assert "trace tail" in capsys.readouterr().err
    assert not json.loads((tmp_path / "result.json").read_text())["converged"]


def test_target_set_validation(tmp_path, capsys):
    main(["generate", "--seed", "2", "--out", str(tmp_path)])
    inst = str(tmp_path / "instance.json")
    assert main(["solve", inst, "--s-list", "500", "--out", str(tmp_path)]) == 1
    assert main(["solve", inst, "--s-list", "1", "--s-size", "3", "--out", str(tmp_path)]) == 1


def test_config_file(tmp_path):
    (tmp_path / "cfg.json").write_text(json.dumps({"num_ues": 7, "num_rrhs": 2}))
    assert main(["generate", "--config", str(tmp_path / "cfg.json"), "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "instance.json").read_text())["n"] == 7
    (tmp_path / "bad.json").write_text(json.dumps({"num_uez": 7}))
    assert main(["generate", "--config", str(tmp_path / "bad.json"), "--out", str(tmp_path)]) == 1


def test_default_sweep_grid(tmp_path):
    assert main(["sweep", "--out", str(tmp_path)]) == 0
    with open(tmp_path / "sweep_runs.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 5 * 6 * 4
    summary = json.loads((tmp_path / "sweep_summary.json").read_text())
    assert len(summary["cells"]) == 24 and summary["failed_runs"] == 0
