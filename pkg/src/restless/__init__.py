"""Scheduling of remote monitoring over binary Markov sources.

The library models a monitor that can probe one source per slot, tracks
beliefs about the unprobed sources, and charges a concave penalty on each
belief.  It provides index-based schedulers, exact small-system solvers, and a
Monte-Carlo harness for comparing the two.
"""

from restless.belief import (
    BanditParams,
    InfoState,
    TruncatedSpace,
    build_space,
    equilibrium,
    info_belief,
    n_step,
    tau,
    tau_k,
)
from restless.hitting import SamplingRegion, discrete_hit
from restless.penalty import Penalty, make_penalty
from restless.rvi import (
    JointMDP,
    RviSolution,
    SingleBanditMDP,
    build_joint,
    extract_region,
    solve_joint,
    solve_single,
    whittle_bisection_oracle,
)
from restless.policy import (
    NO_UPDATE,
    SchedulingPolicy,
    decide,
    myopic_policy,
    never_sample_policy,
    optimal_policy,
    round_robin_policy,
    whittle_policy,
)
from restless.sim import Scenario, SimReport, regret, run
from restless.whittle import IndexTable, build_table, lookup

__all__ = [
    "BanditParams",
    "InfoState",
    "TruncatedSpace",
    "build_space",
    "equilibrium",
    "info_belief",
    "n_step",
    "tau",
    "tau_k",
    "Penalty",
    "make_penalty",
    "SamplingRegion",
    "discrete_hit",
    "SingleBanditMDP",
    "RviSolution",
    "JointMDP",
    "solve_single",
    "solve_joint",
    "build_joint",
    "extract_region",
    "whittle_bisection_oracle",
    "IndexTable",
    "build_table",
    "lookup",
    "NO_UPDATE",
    "SchedulingPolicy",
    "decide",
    "whittle_policy",
    "myopic_policy",
    "optimal_policy",
    "round_robin_policy",
    "never_sample_policy",
    "Scenario",
    "SimReport",
    "run",
    "regret",
]
