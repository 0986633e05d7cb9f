"""Command-line entry point: ``twophase <subcommand> ...``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import exact, harness, instances
from .graph import (AssignmentSpec, IngestOptions, assign_economics, assign_weights,
                    ingest_edge_list, les_miserables, load_instance, save_instance)
from .protocol import TwoPhaseConfig, run_single_phase, run_two_phase
from .selection import AlgorithmChoice

BUILTIN = "lesmis"


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _load(source: str, seed: int):
    """A JSON instance, or the built-in co-occurrence graph with fresh weights."""
    if source == BUILTIN:
        spec = AssignmentSpec(master_seed=seed)
        base = les_miserables()
        return assign_weights(base, spec), assign_economics(base, spec), {"dataset": "LM"}
    net, econ, meta = load_instance(source)
    if not net.has_probabilities or econ is None:
        sys.exit(f"{source}: run 'assign' first (probabilities and economics are required)")
    return net, econ, meta


def cmd_ingest(args):
    opts = IngestOptions(symmetrize=args.symmetrize, relabel=not args.no_relabel)
    net = ingest_edge_list(args.path, opts)
    save_instance(args.out, net, meta={"source": str(args.path), "ingest": net.report})
    print(f"n={net.n} m={net.m} {json.dumps(net.report)} -> {args.out}")


def cmd_assign(args):
    net, _, meta = load_instance(args.instance)
    spec = AssignmentSpec(weighting=args.weighting, constant_p=args.p,
                          cost_interval=tuple(args.cost), benefit_interval=tuple(args.benefit),
                          master_seed=args.seed)
    net = assign_weights(net, spec)
    econ = assign_economics(net, spec)
    meta.update(seed=args.seed, scheme=spec.scheme)
    save_instance(args.out, net, econ, meta)
    print(f"assigned {spec.scheme} probabilities and economics (seed {args.seed}) -> {args.out}")


def cmd_oracle(args):
    net, econ, _ = load_instance(args.instance)
    if econ is None:
        sys.exit("oracle needs an instance with cost and benefit")
    s1 = _ints(args.seeds)
    b1 = args.split * args.budget
    rule = exact.TABULATED if args.rule == "tabulated" else exact.OBSERVED
    table = exact.exact_two_phase_table(net, econ, s1, args.timestep, args.budget - b1,
                                        b1=b1, rule=rule)
    labels = net.labels
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["live_graph", "probability", "already_active", "recently_active", "s2",
                "profit", "contribution"])

    def names(nodes):
        return " ".join(str(labels[u]) for u in nodes)
    for r in table.rows:
        edges = [f"{labels[net.src[i]]}{labels[net.dst[i]]}" for i in range(net.m) if r.mask >> i & 1]
        w.writerow([",".join(edges) or "{}", f"{r.prob:.10g}", names(r.already_active),
                    names(r.recently_active), names(r.s2), f"{r.profit:.10g}",
                    f"{r.contribution:.10g}"])
    w.writerow(["total", "", "", "", "", "", f"{table.total:.10g}"])
    if args.out:
        fh.close()
        print(f"f = {table.total:.6g} -> {args.out}")


def cmd_verify_lemmas(args):
    net, e = instances.fork_network(), instances.fork_economics()
    rule = exact.TABULATED if args.rule == "tabulated" else exact.OBSERVED
    pos = exact.ObjectiveSetting("positive", net, instances.fork_positive_economics(), 1, 3, 4, rule)
    neg = exact.ObjectiveSetting("negative", net, instances.fork_negative_economics(), 1, 3, 4, rule)
    sign = exact.verify_sign_lemma([(pos, (0,)), (neg, (0,))])
    print("sign:", json.dumps({k: round(v, 6) for k, v in sign["values"].items()}),
          "ok" if sign["ok"] else "FAILED")
    fork = exact.ObjectiveSetting("fork", net, e, 1, 3, 4, rule)
    mono = exact.find_nonmonotone_witness([fork])
    print("non-monotone:", mono if mono else "no witness")
    mod = exact.find_nonsubmodular_witness([fork])
    for k, v in mod.items():
        print(f"not {k}:", v if v else "no witness")
    rng = np.random.default_rng(args.seed)
    total = viol = 0
    for i in range(3):
        n2, e2 = instances.random_instance(rng, 4, 3)
        st = exact.ObjectiveSetting(f"random{i}", n2, e2, 1, 150, 300, rule)
        rep = exact.check_subadditivity(st, args.trials, rng)
        total += rep["pairs"]
        viol += len(rep["violations"])
    print(f"subadditivity: {viol} violations over {total} pairs")
    return 0 if sign["ok"] and mono and all(mod.values()) and not viol else 1


def _choice(args) -> AlgorithmChoice:
    return AlgorithmChoice.parse(args.algo, args.epsilon)


def cmd_run_single(args):
    net, econ, _ = _load(args.instance, args.seed)
    res = run_single_phase(net, econ, args.budget, _choice(args), args.samples, args.seed, args.reps)
    print(json.dumps({"seeds": list(res.selection.nodes), "cost": res.selection.total_cost,
                      "profit_mean": res.profit.mean, "profit_stderr": res.profit.stderr,
                      "mean_rounds": res.mean_rounds, "wall_times": res.wall_times}, indent=1))


def cmd_run_two_phase(args):
    net, econ, _ = _load(args.instance, args.seed)
    cfg = TwoPhaseConfig(args.budget, args.split, args.timestep, _choice(args), args.samples,
                         args.reps, args.seed, reselect=not args.frozen)
    res = run_two_phase(net, econ, cfg)
    single = res.single_phase_profit
    print(json.dumps({
        "s1": list(res.s1.nodes), "s1_cost": res.s1.total_cost,
        "last_s2": list(res.s2.nodes), "last_observation": res.observation_summary,
        "two_phase_profit": [res.realized_profit.mean, res.realized_profit.stderr],
        "single_phase_profit": [single.mean, single.stderr],
        "improvement_pct": (res.realized_profit.mean - single.mean) / single.mean * 100
        if single.mean else None,
        "mean_rounds_total": res.mean_rounds_total, "s2_mode": cfg.mode,
        "wall_times": res.wall_times}, indent=1))


def cmd_grid(args):
    net, econ, meta = _load(args.instance, args.seed)
    grid = harness.ExperimentGrid(
        budgets=tuple(args.budget or harness.DEFAULT_BUDGETS),
        split_ratios=tuple(args.split or harness.DEFAULT_RATIOS),
        timesteps=tuple(args.timestep or harness.DEFAULT_TIMESTEPS),
        algorithms=tuple(args.algo.split(",")),
        epsilons=tuple(args.epsilon or harness.DEFAULT_EPSILONS),
        replications=args.reps, samples=args.samples, master_seed=args.seed,
        dataset=args.dataset or meta.get("dataset", Path(args.instance).stem),
        reselect=not args.frozen, workers=args.workers)
    master = harness.run_grid(net, econ, grid, args.out, resume=not args.fresh)
    print(f"wrote {master}")
    print(harness.format_report(harness.report_improvements(master)))


def cmd_report(args):
    summaries = harness.report_improvements(args.master, timestep=args.timestep)
    print(harness.format_report(summaries))
    if args.plots:
        for p in sorted(Path(args.master).parent.glob("rq*.csv")):
            print("plot data:", harness.emit_plot_data(p))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="twophase", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ingest", help="edge list -> JSON instance")
    s.add_argument("path")
    s.add_argument("--symmetrize", action="store_true")
    s.add_argument("--no-relabel", action="store_true")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("assign", help="draw probabilities, costs and benefits")
    s.add_argument("instance")
    s.add_argument("--weighting", default="trivalency", choices=["trivalency", "constant", "from_file"])
    s.add_argument("--p", type=float, default=0.1)
    s.add_argument("--cost", type=float, nargs=2, default=(50.0, 100.0))
    s.add_argument("--benefit", type=float, nargs=2, default=(800.0, 1000.0))
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_assign)

    s = sub.add_parser("oracle", help="exact two-phase table for a small instance")
    s.add_argument("instance")
    s.add_argument("--seeds", required=True, help="phase-one seeds, e.g. 0,2")
    s.add_argument("--budget", type=float, required=True)
    s.add_argument("--split", type=float, required=True)
    s.add_argument("--timestep", type=int, default=1)
    s.add_argument("--rule", choices=["observed", "tabulated"], default="observed")
    s.add_argument("--out")
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("verify-lemmas", help="structural checks on the reference instances")
    s.add_argument("--trials", type=int, default=200)
    s.add_argument("--rule", choices=["observed", "tabulated"], default="tabulated")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_verify_lemmas)

    def sim_flags(s, two_phase):
        s.add_argument("instance", help=f"JSON instance or '{BUILTIN}'")
        s.add_argument("--budget", type=float, required=True)
        s.add_argument("--algo", default="SG")
        s.add_argument("--epsilon", type=float)
        s.add_argument("--samples", type=int, default=10_000)
        s.add_argument("--reps", type=int, default=50)
        s.add_argument("--seed", type=int, default=0)
        if two_phase:
            s.add_argument("--split", type=float, required=True)
            s.add_argument("--timestep", type=int, required=True)
            s.add_argument("--frozen", action="store_true", help="select S2 once, not per replication")

    s = sub.add_parser("run-single", help="one budget, one selection, simulated profit")
    sim_flags(s, False)
    s.set_defaults(func=cmd_run_single)
    s = sub.add_parser("run-two-phase", help="two-phase protocol against its single-phase twin")
    sim_flags(s, True)
    s.set_defaults(func=cmd_run_two_phase)

    s = sub.add_parser("grid", help="full experiment grid to CSV")
    s.add_argument("instance", help=f"JSON instance or '{BUILTIN}'")
    s.add_argument("--budget", type=_floats)
    s.add_argument("--split", type=_floats)
    s.add_argument("--timestep", type=_ints)
    s.add_argument("--algo", default="SG,DG")
    s.add_argument("--epsilon", type=_floats)
    s.add_argument("--samples", type=int, default=10_000)
    s.add_argument("--reps", type=int, default=50)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--dataset")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--frozen", action="store_true")
    s.add_argument("--fresh", action="store_true", help="ignore an existing manifest")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_grid)

    s = sub.add_parser("report", help="improvement summary from a master CSV")
    s.add_argument("master")
    s.add_argument("--timestep", type=int)
    s.add_argument("--plots", action="store_true", help="also emit .dat files")
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return int(args.func(args) or 0)


if __name__ == "__main__":
    sys.exit(main())
