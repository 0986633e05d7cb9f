import csv

import pytest

from twophase import harness
from twophase.harness import ExperimentGrid, run_grid


def tiny(**kw):
    base = dict(budgets=(300.0, 600.0), split_ratios=(0.5,), timesteps=(1, 2),
                algorithms=("SG", "StG", "HD"), epsilons=(0.3,), replications=3, samples=100,
                master_seed=4)
    base.update(kw)
    return ExperimentGrid(**base)


def test_grid_validation():
    with pytest.raises(ValueError):
        tiny(split_ratios=(1.0,))
    with pytest.raises(ValueError):
        tiny(timesteps=(0,))
    with pytest.raises(ValueError):
        tiny(algorithms=("SG", "Nope"))
    with pytest.raises(ValueError):
        tiny(epsilons=())


def test_expected_rows_and_tasks():
    g = tiny()
    assert len(g.single_tasks()) + len(g.two_phase_tasks()) == g.expected_rows() == 3 * 2 * 3


def test_run_grid_writes_master_and_tables(lm, tmp_path):
    net, econ = lm
    g = tiny()
    master = run_grid(net, econ, g, tmp_path)
    rows = harness.read_csv(master)
    assert len(rows) == g.expected_rows()
    assert list(rows[0]) == harness.COLUMNS
    assert not any(r["error"] for r in rows)
    two = [r for r in rows if r["mode"] == "two_phase"]
    assert all(r["improvement_pct"] != "" for r in two)
    assert all(r["s2_mode"] == "reselect" for r in two)
    for name in harness.RQ_TABLES:
        assert (tmp_path / f"{name}.csv").exists()
    stg = [r for r in rows if r["algorithm"] == "StG"]
    assert stg and all(r["epsilon"] == "0.3" for r in stg)


def test_improvement_is_relative_to_matching_single_row(lm, tmp_path):
    net, econ = lm
    rows = harness.read_csv(run_grid(net, econ, tiny(algorithms=("SG",)), tmp_path))
    single = {r["budget"]: float(r["profit_mean"]) for r in rows if r["mode"] == "single"}
    for r in rows:
        if r["mode"] == "two_phase":
            s = single[r["budget"]]
            assert float(r["improvement_pct"]) == pytest.approx((float(r["profit_mean"]) - s) / s * 100)


def test_resume_skips_done_cells_and_reproduces(lm, tmp_path):
    net, econ = lm
    g = tiny(algorithms=("HD",))
    first = harness.master_without_timing(run_grid(net, econ, g, tmp_path))
    before = (tmp_path / "manifest.jsonl").read_text().count("\n")
    again = harness.master_without_timing(run_grid(net, econ, g, tmp_path))
    assert first == again
    assert (tmp_path / "manifest.jsonl").read_text().count("\n") == before


def test_parallel_matches_serial(lm, tmp_path):
    net, econ = lm
    a = run_grid(net, econ, tiny(algorithms=("DG",)), tmp_path / "a")
    b = run_grid(net, econ, tiny(algorithms=("DG",), workers=2), tmp_path / "b")
    assert harness.master_without_timing(a) == harness.master_without_timing(b)


def test_report_and_plot_data(lm, tmp_path):
    net, econ = lm
    master = run_grid(net, econ, tiny(algorithms=("SG",)), tmp_path)
    summaries = harness.report_improvements(master, timestep=2)
    assert len(summaries) == 1 and summaries[0].cells == 2
    text = harness.format_report(summaries)
    assert "observed max improvement" in text and "40%" in text
    dat = harness.emit_plot_data(tmp_path / "rq2_split.csv")
    lines = dat.read_text().splitlines()
    assert lines[0].startswith("# rq2_split") and len(lines) > 2


def test_failed_cell_is_recorded(lm, tmp_path, monkeypatch):
    net, econ = lm

    def boom(*a, **k):
        raise RuntimeError("broken")
    monkeypatch.setattr(harness, "run_two_phase", boom)
    rows = harness.read_csv(run_grid(net, econ, tiny(algorithms=("HD",)), tmp_path))
    bad = [r for r in rows if r["error"]]
    assert bad and all(r["mode"] == "two_phase" and "broken" in r["error"] for r in bad)
    with open(tmp_path / "master.csv", newline="") as fh:
        assert len(list(csv.reader(fh))) == len(rows) + 1
