import json

import pytest

from twophase import instances
from twophase.cli import main
from twophase.graph import load_instance, save_instance


def test_ingest_assign_and_oracle(tmp_path, capsys):
    edges = tmp_path / "g.txt"
    edges.write_text("# toy\na b\nb c\nc c\n")
    raw = tmp_path / "raw.json"
    assert main(["ingest", str(edges), "--out", str(raw)]) == 0
    net, econ, meta = load_instance(raw)
    assert net.n == 3 and econ is None and meta["ingest"]["self_loops_dropped"] == 1
    full = tmp_path / "full.json"
    assert main(["assign", str(raw), "--seed", "2", "--out", str(full)]) == 0
    net, econ, _ = load_instance(full)
    assert net.has_probabilities and econ.n == 3


def test_oracle_reproduces_hand_total(tmp_path, capsys):
    path = tmp_path / "fork.json"
    save_instance(path, instances.fork_network(), instances.fork_economics())
    out = tmp_path / "table.csv"
    main(["oracle", str(path), "--seeds", "0", "--budget", "3", "--split", "0.6666666666666666",
          "--rule", "tabulated", "--out", str(out)])
    last = out.read_text().strip().splitlines()[-1]
    assert float(last.split(",")[-1]) == pytest.approx(9.742, abs=1e-9)
    assert len(out.read_text().strip().splitlines()) == 1 + 8 + 1


def test_verify_lemmas(capsys):
    assert main(["verify-lemmas", "--trials", "30"]) == 0
    text = capsys.readouterr().out
    assert "sign:" in text and "ok" in text and "0 violations" in text


def test_run_two_phase_builtin(capsys):
    main(["run-two-phase", "lesmis", "--budget", "500", "--split", "0.5", "--timestep", "2",
          "--samples", "200", "--reps", "3", "--seed", "1"])
    doc = json.loads(capsys.readouterr().out)
    assert doc["s2_mode"] == "reselect" and len(doc["two_phase_profit"]) == 2


def test_run_single_builtin(capsys):
    main(["run-single", "lesmis", "--budget", "300", "--algo", "StG:0.1", "--samples", "200",
          "--reps", "2"])
    doc = json.loads(capsys.readouterr().out)
    assert doc["cost"] <= 300


def test_grid_and_report(tmp_path, capsys):
    out = tmp_path / "grid"
    main(["grid", "lesmis", "--budget", "400", "--split", "0.5", "--timestep", "1,2",
          "--algo", "HD", "--samples", "50", "--reps", "2", "--out", str(out)])
    assert (out / "master.csv").exists()
    capsys.readouterr()
    main(["report", str(out / "master.csv"), "--plots"])
    text = capsys.readouterr().out
    assert "HD" in text and "plot data:" in text


def test_unassigned_instance_is_rejected(tmp_path):
    path = tmp_path / "raw.json"
    save_instance(path, instances.fork_network().with_probabilities([float("nan")] * 3))
    with pytest.raises(SystemExit):
        main(["run-single", str(path), "--budget", "1"])
