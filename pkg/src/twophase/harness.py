"""Experiment grid over budgets, split ratios, timesteps and algorithms.

The master CSV holds one row per single-phase run (per algorithm, budget and
epsilon) and one per two-phase grid cell.  Derived tables (one per research
question) and gnuplot ``.dat`` files are computed from it.

Seeding: every cell's own randomness comes from
``stream_key(master_seed, dataset, algorithm, budget, ratio, timestep, eps)``;
the simulated worlds and the phase-one estimator snapshot are shared by all
cells of a dataset so that single- and two-phase rows are paired.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from . import rng as _rng
from .protocol import TwoPhaseConfig, run_single_phase, run_two_phase
from .selection import AlgorithmChoice

log = logging.getLogger(__name__)

DEFAULT_BUDGETS = (500.0, 1000.0, 1500.0, 2000.0, 2500.0)
DEFAULT_RATIOS = (0.1, 0.3, 0.5, 0.7, 0.9)
DEFAULT_TIMESTEPS = (2, 4, 6, 8, 10)
DEFAULT_EPSILONS = (0.01, 0.1, 0.3, 0.6)

HEADLINE_TYPICAL = 18.0
HEADLINE_MAX = 40.0


@dataclass
class ExperimentGrid:
    budgets: tuple = DEFAULT_BUDGETS
    split_ratios: tuple = DEFAULT_RATIOS
    timesteps: tuple = DEFAULT_TIMESTEPS
    algorithms: tuple = ("SG", "DG")
    epsilons: tuple = DEFAULT_EPSILONS
    replications: int = 50
    samples: int = 10_000
    master_seed: int = 0
    dataset: str = "LM"
    reselect: bool = True
    workers: int = 1

    def __post_init__(self):
        for name in ("budgets", "split_ratios", "timesteps", "algorithms"):
            if not len(getattr(self, name)):
                raise ValueError(f"{name} must be non-empty")
        if any(not 0 < r < 1 for r in self.split_ratios):
            raise ValueError("split ratios must lie in (0, 1)")
        if any(t < 1 for t in self.timesteps):
            raise ValueError("timesteps must be >= 1")
        if "StG" in self.algorithms and not len(self.epsilons):
            raise ValueError("stochastic greedy needs at least one epsilon")
        for a in self.algorithms:
            AlgorithmChoice(a, 0.5 if a == "StG" else None)

    def choices(self) -> list[AlgorithmChoice]:
        out = []
        for a in self.algorithms:
            if a == "StG":
                out.extend(AlgorithmChoice("StG", e) for e in self.epsilons)
            else:
                out.append(AlgorithmChoice(a))
        return out

    def single_tasks(self) -> list["Task"]:
        return [Task(str(c), b, None, None) for c in self.choices() for b in self.budgets]

    def two_phase_tasks(self) -> list["Task"]:
        return [Task(str(c), b, r, t) for c in self.choices() for b in self.budgets
                for r in self.split_ratios for t in self.timesteps]

    def expected_rows(self) -> int:
        k = len(self.choices())
        return k * len(self.budgets) * (1 + len(self.split_ratios) * len(self.timesteps))


@dataclass(frozen=True)
class Task:
    algorithm: str
    budget: float
    split_ratio: float | None
    timestep: int | None

    @property
    def mode(self) -> str:
        return "single" if self.split_ratio is None else "two_phase"

    @property
    def key(self) -> str:
        return f"{self.algorithm}|{self.budget:g}|{self.split_ratio}|{self.timestep}"


@dataclass
class ResultRow:
    dataset: str
    algorithm: str
    budget: float
    split_ratio: float | None
    timestep: int | None
    epsilon: float | None
    mode: str
    profit_mean: float
    profit_stderr: float
    seed_set_size: float
    diffusion_rounds: float
    wall_time_seconds: float
    master_seed: int
    samples: int
    replications: int
    s2_mode: str = ""
    improvement_pct: float | None = None
    error: str = ""


COLUMNS = [f.name for f in fields(ResultRow)]
NON_REPRODUCIBLE = ("wall_time_seconds",)


def cell_seed(master_seed: int, dataset: str, task: Task) -> int:
    choice = AlgorithmChoice.parse(task.algorithm)
    return _rng.stream_key(master_seed, dataset, choice.name, float(task.budget),
                           task.split_ratio, task.timestep, choice.epsilon)


def _run_task(network, econ, grid: ExperimentGrid, task: Task) -> ResultRow:
    choice = AlgorithmChoice.parse(task.algorithm)
    seed = cell_seed(grid.master_seed, grid.dataset, task)
    world_seed = _rng.stream_key(grid.master_seed, grid.dataset, "worlds")
    select_seed = _rng.stream_key(grid.master_seed, grid.dataset, "select")
    row = ResultRow(grid.dataset, choice.name, float(task.budget), task.split_ratio, task.timestep,
                    choice.epsilon, task.mode, math.nan, math.nan, math.nan, math.nan, 0.0,
                    grid.master_seed, grid.samples, grid.replications,
                    s2_mode="" if task.mode == "single" else ("reselect" if grid.reselect else "frozen"))
    t0 = time.perf_counter()
    try:
        if task.mode == "single":
            res = run_single_phase(network, econ, task.budget, choice, grid.samples, seed,
                                   grid.replications, world_seed=world_seed,
                                   select_seed=select_seed)
            row.profit_mean, row.profit_stderr = res.profit.mean, res.profit.stderr
            row.seed_set_size, row.diffusion_rounds = float(len(res.selection)), res.mean_rounds
        else:
            cfg = TwoPhaseConfig(task.budget, task.split_ratio, task.timestep, choice, grid.samples,
                                 grid.replications, seed, grid.reselect,
                                 world_seed=world_seed, select_seed=select_seed)
            res = run_two_phase(network, econ, cfg, with_single=False)
            row.profit_mean, row.profit_stderr = res.realized_profit.mean, res.realized_profit.stderr
            row.seed_set_size, row.diffusion_rounds = res.mean_seed_count, res.mean_rounds_total
    except Exception as exc:     # recorded, the grid carries on
        log.exception("cell %s failed", task.key)
        row.error = f"{type(exc).__name__}: {exc}"
    row.wall_time_seconds = time.perf_counter() - t0
    return row


_WORKER = {}


def _init_worker(network, econ, grid):
    _WORKER.update(network=network, econ=econ, grid=grid)


def _worker_task(task):
    return _run_task(_WORKER["network"], _WORKER["econ"], _WORKER["grid"], task)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return str(v)


def _sort_key(row: dict):
    def num(x):
        return -1.0 if x in ("", None) else float(x)
    return (row["dataset"], row["algorithm"], num(row["epsilon"]), row["mode"] != "single",
            num(row["budget"]), num(row["split_ratio"]), num(row["timestep"]))


def _attach_improvements(rows: list[dict]) -> None:
    single = {(r["dataset"], r["algorithm"], r["epsilon"], r["budget"]): r
              for r in rows if r["mode"] == "single"}
    for r in rows:
        if r["mode"] != "two_phase":
            continue
        s = single.get((r["dataset"], r["algorithm"], r["epsilon"], r["budget"]))
        r["improvement_pct"] = None
        if s and not r["error"] and not s["error"] and s["profit_mean"] not in (None, 0.0):
            base = float(s["profit_mean"])
            r["improvement_pct"] = (float(r["profit_mean"]) - base) / base * 100.0


def write_csv(path, rows: list[dict], columns=COLUMNS) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c)) for c in columns])


def read_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def run_grid(network, econ, grid: ExperimentGrid, out_dir, resume: bool = True) -> Path:
    """Run every cell (skipping ones already in the manifest) and write all CSVs.

    Returns the path of the master CSV.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = out / "manifest.jsonl"
    settings = {k: v for k, v in asdict(grid).items() if k != "workers"}
    header = out / "grid.json"
    done: dict[str, dict] = {}
    if resume and manifest.exists() and header.exists() and \
            json.loads(header.read_text()) == json.loads(json.dumps(settings)):
        for line in manifest.read_text(encoding="utf-8").splitlines():
            if line.strip():
                rec = json.loads(line)
                if not rec["row"]["error"]:
                    done[rec["key"]] = rec["row"]
    else:
        manifest.write_text("", encoding="utf-8")
        header.write_text(json.dumps(settings, indent=1) + "\n", encoding="utf-8")

    tasks = [t for t in grid.single_tasks() + grid.two_phase_tasks() if t.key not in done]
    log.info("%d cells to run, %d already done", len(tasks), len(done))
    with manifest.open("a", encoding="utf-8") as fh:
        def record(task, row):
            d = asdict(row)
            done[task.key] = d
            fh.write(json.dumps({"key": task.key, "row": d}) + "\n")
            fh.flush()

        if grid.workers > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(grid.workers, initializer=_init_worker,
                                     initargs=(network, econ, grid)) as pool:
                for task, row in zip(tasks, pool.map(_worker_task, tasks)):
                    record(task, row)
        else:
            for task in tasks:
                record(task, _run_task(network, econ, grid, task))

    rows = sorted(done.values(), key=_sort_key)
    _attach_improvements(rows)
    master = out / "master.csv"
    write_csv(master, rows)
    write_rq_tables(rows, out)
    return master


# --------------------------------------------------------------------------
# derived tables


def _mean(xs):
    xs = [float(x) for x in xs if x not in ("", None)]
    return statistics.fmean(xs) if xs else None


def _group(rows, keys, value, where=lambda r: True):
    groups: dict = {}
    for r in rows:
        if r.get("error") or not where(r):
            continue
        groups.setdefault(tuple(r[k] for k in keys), []).append(r[value])
    return groups


def _pivot(rows, keys, values, where=lambda r: True) -> list[dict]:
    out: dict = {}
    for v in values:
        for k, xs in _group(rows, keys, v, where).items():
            out.setdefault(k, dict(zip(keys, k)))[v] = _mean(xs)
    return [out[k] for k in sorted(out, key=lambda k: [(0, float(x), "") if _isnum(x) else (1, 0.0, str(x))
                                                        for x in k])]


def _isnum(x) -> bool:
    try:
        float(x)
        return x not in ("", None)
    except (TypeError, ValueError):
        return False


def _two(r):
    return r["mode"] == "two_phase"


RQ_TABLES = {
    "rq1_budget": (["dataset", "algorithm", "epsilon", "budget", "mode"], ["profit_mean", "improvement_pct"], None),
    "rq2_split": (["dataset", "algorithm", "epsilon", "budget", "split_ratio"], ["profit_mean", "improvement_pct"], _two),
    "rq3_timestep": (["dataset", "algorithm", "epsilon", "budget", "timestep"], ["profit_mean", "improvement_pct"], _two),
    "rq4_seed_size": (["dataset", "algorithm", "epsilon", "budget", "mode"], ["seed_set_size"], None),
    "rq5_rounds": (["dataset", "algorithm", "epsilon", "budget", "mode"], ["diffusion_rounds"], None),
    "rq6_time": (["dataset", "algorithm", "epsilon", "budget", "mode"], ["wall_time_seconds"], None),
    "rq7_epsilon": (["dataset", "epsilon", "budget", "mode"], ["profit_mean", "wall_time_seconds"],
                    lambda r: r["algorithm"] == "StG"),
}


def write_rq_tables(rows: list[dict], out_dir) -> dict:
    rows = [{k: _fmt(v) if not isinstance(v, str) else v for k, v in r.items()} for r in rows]
    paths = {}
    for name, (keys, values, where) in RQ_TABLES.items():
        table = _pivot(rows, keys, values, where or (lambda r: True))
        path = Path(out_dir) / f"{name}.csv"
        write_csv(path, table, keys + values)
        paths[name] = path
    return paths


# --------------------------------------------------------------------------
# reporting


@dataclass
class ImprovementSummary:
    dataset: str
    algorithm: str
    cells: int
    positive_fraction: float
    median_pct: float
    max_pct: float
    mean_pct: float


def report_improvements(master_csv, timestep: int | None = None) -> list[ImprovementSummary]:
    """Per dataset and algorithm: how often and by how much two-phase wins."""
    rows = read_csv(master_csv)
    groups: dict = {}
    for r in rows:
        if r["mode"] != "two_phase" or r["error"] or r["improvement_pct"] == "":
            continue
        if timestep is not None and int(r["timestep"]) != timestep:
            continue
        name = r["algorithm"] + (f"(eps={float(r['epsilon']):g})" if r["epsilon"] else "")
        groups.setdefault((r["dataset"], name), []).append(float(r["improvement_pct"]))
    out = []
    for (ds, algo), xs in sorted(groups.items()):
        out.append(ImprovementSummary(ds, algo, len(xs), sum(x > 0 for x in xs) / len(xs),
                                      statistics.median(xs), max(xs), statistics.fmean(xs)))
    return out


def format_report(summaries: list[ImprovementSummary]) -> str:
    lines = [f"{'dataset':8s} {'algorithm':16s} {'cells':>5s} {'won':>6s} {'median%':>8s} "
             f"{'max%':>8s} {'mean%':>8s}"]
    for s in summaries:
        lines.append(f"{s.dataset:8s} {s.algorithm:16s} {s.cells:5d} {s.positive_fraction:6.0%} "
                     f"{s.median_pct:8.2f} {s.max_pct:8.2f} {s.mean_pct:8.2f}")
    if summaries:
        best = max(s.max_pct for s in summaries)
        lines.append(f"observed max improvement {best:.2f}% "
                     f"(reference headline: above {HEADLINE_TYPICAL:g}%, up to {HEADLINE_MAX:g}%)")
    return "\n".join(lines)


PLOT_FAMILIES = {name: (keys, values) for name, (keys, values, _) in RQ_TABLES.items()}


def emit_plot_data(csv_path, out_path=None) -> Path:
    """Whitespace-delimited ``.dat`` with a ``#`` header naming the axes."""
    csv_path = Path(csv_path)
    family = csv_path.stem
    with open(csv_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        data = list(reader)
    if header is None:
        raise ValueError(f"{csv_path} has no header row")
    if family in PLOT_FAMILIES:
        keys, values = PLOT_FAMILIES[family]
        missing = [c for c in keys + values if c not in header]
        if missing:
            raise ValueError(f"{csv_path}: missing columns {missing}")
        x_axis, y_axis = keys[-1], ", ".join(values)
    else:
        x_axis, y_axis = header[0], ", ".join(header[1:])
    out_path = Path(out_path) if out_path else csv_path.with_suffix(".dat")
    lines = [f"# {family}: x = {x_axis}; y = {y_axis}", "# " + " ".join(header)]
    for row in data:
        lines.append(" ".join(c.replace(" ", "_") if c != "" else "NaN" for c in row))
    out_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return out_path


def master_without_timing(path) -> str:
    """Master CSV text with the wall-time column blanked, for reproducibility checks."""
    rows = read_csv(path)
    cols = [c for c in COLUMNS if c not in NON_REPRODUCIBLE]
    lines = [",".join(cols)]
    for r in rows:
        lines.append(",".join(r[c] for c in cols))
    return "\n".join(lines) + "\n"
