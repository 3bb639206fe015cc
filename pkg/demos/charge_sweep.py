"""
Sweep the service charge on a single source and watch the update region
shrink.

For each charge the average-penalty problem is solved exactly and the
greedy policy's active belief interval is printed.  The intervals are
nested: raising the price of an update only ever removes beliefs from the
region, never adds them.  That nesting is what makes the index policy
well-defined, and the charge at which a given belief drops out of the
region is exactly its index.
"""

import numpy as np

from restless import (
    BanditParams,
    SingleBanditMDP,
    build_space,
    build_table,
    extract_region,
    make_penalty,
    solve_single,
)

params = BanditParams(0.1, 0.3)
penalty = make_penalty("entropy")
space = build_space(params, 1e-6)

table = build_table(params, penalty, space=space)
top = 1.5 * float(table.indices[-1])
print(f"source p={params.p} q={params.q}, largest index {table.indices[-1]:.4f}\n")
print(f"{'charge':>8s} {'region':>24s} {'active states':>14s}")

warm = None
for lam in np.linspace(0.0, top, 12):
    sol = solve_single(SingleBanditMDP(params, penalty, float(lam), space),
                       v_init=warm)
    warm = sol.V
    region = extract_region(sol, space)
    n_active = int(sol.policy.sum())
    if region.is_empty:
        desc = "empty"
    else:
        desc = f"({region.lower:.4f}, {region.upper:.4f})"
    print(f"{lam:8.4f} {desc:>24s} {n_active:14d}")
