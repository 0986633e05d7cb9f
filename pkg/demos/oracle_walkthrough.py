"""Exact two-phase objective on the four-node fork, live graph by live graph.

Prints each live graph with its probability, what phase one observed after
one round, the phase-two pick and the weighted profit, under both phase-two
rules.
"""
from twophase import exact, instances

net, econ = instances.fork_network(), instances.fork_economics()
labels = net.labels


def show(rule, name):
    table = exact.exact_two_phase_table(net, econ, [0], 1, 1.0, b1=2.0, rule=rule)
    print(f"\n{name}: S1 = {{u1}}, B1 = 2, B = 3")
    print(f"{'live graph':18s} {'P(G)':>6s} {'R_Y':6s} {'S2':6s} {'P*profit':>9s}")
    for r in table.rows:
        edges = ",".join(f"{labels[net.src[i]]}{labels[net.dst[i]]}" for i in range(net.m) if r.mask >> i & 1)
        print(f"{edges or '{}':18s} {r.prob:6.3f} {' '.join(labels[u] for u in r.recently_active):6s} "
              f"{' '.join(labels[u] for u in r.s2):6s} {r.contribution:9.4f}")
    print(f"f = {table.total:.4f}")


show(exact.TABULATED, "hindsight pick per live graph")
show(exact.OBSERVED, "one pick per observation")
