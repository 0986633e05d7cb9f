"""Stochastic greedy: fewer marginal evaluations as epsilon grows, at some profit cost."""
import time

from twophase import AssignmentSpec, les_miserables, make_instance
from twophase.selection import SelectionContext, simple_greedy, stochastic_greedy

net, econ = make_instance(les_miserables(), AssignmentSpec(master_seed=0))
ctx = SelectionContext(net, econ, 500.0, 10_000, 7)
sg = simple_greedy(ctx)
print(f"SG      profit {ctx.get_estimator().profit(sg.nodes).mean:9.1f}  evaluations {sg.info['evaluations']}")
for eps in (0.01, 0.1, 0.3, 0.6):
    c = SelectionContext(net, econ, 500.0, 10_000, 7)
    t = time.perf_counter()
    sel = stochastic_greedy(c, eps)
    dt = time.perf_counter() - t
    print(f"StG {eps:<4} profit {c.get_estimator().profit(sel.nodes).mean:9.1f}  "
          f"evaluations {sel.info['evaluations']:4d}  sample {sel.info['sample_size']:3d}  {dt:.3f}s")
