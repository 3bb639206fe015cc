"""
Build Whittle index tables for one slow-mixing and one oscillating source
and print the priority order over information states.

The monotonic source's indices rise with staleness, merging only where
the beliefs crowd within the truncation tolerance of the equilibrium.
The oscillating source shows the characteristic plateau: every state
whose belief has crossed to the far side of the equilibrium shares one
index value, because a single update ends the oscillation for all of
them.
"""

from restless import BanditParams, build_table, make_penalty

entropy = make_penalty("entropy")


def show(label, params, epsilon):
    table = build_table(params, entropy, epsilon=epsilon)
    sp = table.space
    print(f"\n{label}: p={params.p} q={params.q} "
          f"(p+q={params.p + params.q:g}), {sp.size} states, cutoff F={sp.F}")
    print(f"{'state':>12s} {'belief':>10s} {'index':>10s}")
    for rank, pos in enumerate(table.order):
        last, age = sp.tags[pos]
        name = "equilibrium" if last < 0 else f"({last}, {age})"
        print(f"{name:>12s} {sp.beliefs[pos]:10.6f} {table.indices[rank]:10.6f}")


# beliefs approach the equilibrium from one side: staleness keeps hurting
show("monotonic", BanditParams(0.2, 0.3), epsilon=1e-4)

# beliefs alternate around the equilibrium: the far side collapses to a plateau
show("oscillating", BanditParams(0.8, 0.6), epsilon=1e-4)
