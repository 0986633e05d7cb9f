"""Contract checks shared by the property tests and the acceptance suite."""
import math

import numpy as np

from twophase import instances
from twophase.diffusion import continue_diffusion, live_masks, simulate_to_timestep
from twophase.graph import residual_view
from twophase.selection import AlgorithmChoice, SelectionContext, select

TOL = 1e-9


def random_setting(rng: np.random.Generator) -> dict:
    n = int(rng.integers(3, 13))
    m = int(rng.integers(1, min(n * (n - 1), 3 * n) + 1))
    net, econ = instances.random_instance(rng, n, m, p_range=(0.05, 1.0),
                                          cost_range=(float(rng.uniform(1, 50)), 100.0),
                                          benefit_range=(0.0, float(rng.uniform(10, 400))))
    return dict(net=net, econ=econ, budget=float(rng.uniform(0, econ.cost.sum())),
                ratio=float(rng.uniform(0.05, 0.95)), d=int(rng.integers(0, 4)),
                algo=str(rng.choice(["SG", "DG", "StG", "HD", "SD", "DD", "HighCC", "Random"])),
                eps=float(rng.uniform(0.01, 0.9)), seed=int(rng.integers(2 ** 31)),
                estimator="exact" if m <= 10 and rng.random() < 0.3 else "snapshot")


def contract_violations(s: dict, worlds: int = 3, samples: int = 200) -> list[str]:
    """Run phase one, observation, phase two and continuation; list broken contracts."""
    net, econ = s["net"], s["econ"]
    out = []
    choice = AlgorithmChoice(s["algo"], s["eps"] if s["algo"] == "StG" else None)
    b1 = s["ratio"] * s["budget"]
    ctx1 = SelectionContext(net, econ, b1, samples, s["seed"], estimator=s["estimator"])
    s1 = select(ctx1, choice)
    if s1.total_cost > b1 + TOL:
        out.append(f"S1 cost {s1.total_cost} > {b1}")
    out += _call_bounds(ctx1, s1, choice)
    b2 = s["budget"] - b1 + max(0.0, b1 - s1.total_cost)
    for w, live in enumerate(live_masks(net, s["seed"], "world", 0, worlds)):
        obs = simulate_to_timestep(net, s1.nodes, s["d"], live)
        ctx2 = SelectionContext(residual_view(net, obs.already_active), econ, b2, samples,
                                s["seed"] + w + 1, anchor=tuple(sorted(obs.recently_active)),
                                estimator=s["estimator"])
        s2 = select(ctx2, choice)
        if s2.total_cost > b2 + TOL:
            out.append(f"S2 cost {s2.total_cost} > {b2}")
        if set(s2.nodes) & obs.already_active:
            out.append(f"S2 {s2.nodes} meets A_Y {sorted(obs.already_active)}")
        if s1.total_cost + s2.total_cost > s["budget"] + TOL:
            out.append("total spend exceeds budget")
        out += _call_bounds(ctx2, s2, choice)
        try:
            fin = continue_diffusion(net, obs, s2.nodes, live)
        except AssertionError as exc:
            out.append(f"edge attempted twice: {exc}")
            continue
        if fin.tried_edges & (obs.failed_edges | obs.live_edges):
            out.append("continuation re-attempted an observed edge")
        if not obs.already_active <= fin.activated:
            out.append("continuation lost active nodes")
    return out


def _call_bounds(ctx, sel, choice) -> list[str]:
    cands = ctx.candidates
    if choice.name == "SG":
        cmin = float(ctx.econ.cost[cands].min()) if cands else 1.0
        bound = math.ceil(ctx.budget / cmin + TOL) if cands else 0
        if sel.info["iterations"] > bound:
            return [f"SG ran {sel.info['iterations']} iterations > ceil(B/Cmin) = {bound}"]
    if choice.name == "DG" and sel.info["pair_evaluations"] != len(cands):
        return [f"DG made {sel.info['pair_evaluations']} pair evaluations for {len(cands)} nodes"]
    return []
