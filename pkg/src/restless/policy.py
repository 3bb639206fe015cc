"""Scheduling policies over several monitored sources.

Every policy answers one question each slot: given the monitor's current
information about all M sources, which single source gets updated.  The
index policy replies with the per-source priority tables, the myopic
policy with the instantaneous penalties, and the optimal policy with the
greedy action of the jointly solved scheduling problem.  Two baselines
round out the set: cyclic service of the stalest source, and a proxy for
never updating anything.
"""

from dataclasses import dataclass

import numpy as np

from .belief import info_belief
from .whittle import IndexTable, lookup

KINDS = ("whittle", "myopic", "optimal", "round-robin", "never-sample-proxy")

# decide() result meaning "update nobody this slot"; only the
# never-sample-proxy baseline produces it
NO_UPDATE = -1


@dataclass(frozen=True)
class SchedulingPolicy:
    """One scheduling rule over a fixed set of processes.

    The decision is a pure function of the tuple of current InfoStates;
    nothing is mutated between slots.  Payload fields are kind-specific
    and the factories below fill them in.
    """

    kind: str
    n_processes: int
    tables: tuple = ()
    params: tuple = ()
    penalties: tuple = ()
    joint_spaces: tuple = ()
    joint_policy: np.ndarray = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}; expected one of {KINDS}")
        if self.n_processes < 1:
            raise ValueError(f"need at least one process, got {self.n_processes}")


def whittle_policy(tables) -> SchedulingPolicy:
    """Index policy: update the process whose current index is largest."""
    tables = tuple(tables)
    if not all(isinstance(t, IndexTable) for t in tables):
        raise TypeError("whittle policy needs one IndexTable per process")
    return SchedulingPolicy(kind="whittle", n_processes=len(tables), tables=tables)


def myopic_policy(params_list, penalty_list) -> SchedulingPolicy:
    """Update the process with the largest penalty at its current belief."""
    params_list, penalty_list = tuple(params_list), tuple(penalty_list)
    if len(params_list) != len(penalty_list):
        raise ValueError("need one penalty per process")
    return SchedulingPolicy(kind="myopic", n_processes=len(params_list),
                            params=params_list, penalties=penalty_list)


def optimal_policy(joint, solution) -> SchedulingPolicy:
    """Greedy lookup into the solved joint scheduling problem."""
    sizes = tuple(sp.size for sp in joint.spaces)
    return SchedulingPolicy(kind="optimal", n_processes=len(joint.spaces),
                            joint_spaces=tuple(joint.spaces),
                            joint_policy=np.asarray(solution.policy).reshape(sizes))


def round_robin_policy(n_processes: int) -> SchedulingPolicy:
    """Cyclic service: update the process whose information is stalest.

    Picking the largest age (lowest process index on ties) reproduces a
    fixed cyclic order once every source has been visited, while staying a
    pure function of the current states.
    """
    return SchedulingPolicy(kind="round-robin", n_processes=n_processes)


def never_sample_policy(n_processes: int) -> SchedulingPolicy:
    """Baseline that lets every belief coast to its equilibrium."""
    return SchedulingPolicy(kind="never-sample-proxy", n_processes=n_processes)


def decide(policy: SchedulingPolicy, states) -> int:
    """Process to update this slot, or NO_UPDATE for the never-sample proxy.

    Ties always go to the lowest process index so repeated runs and
    different implementations of argmax agree.
    """
    states = tuple(states)
    if len(states) != policy.n_processes:
        raise ValueError(f"expected {policy.n_processes} states, got {len(states)}")
    if policy.kind == "whittle":
        scores = [lookup(t, s) for t, s in zip(policy.tables, states)]
    elif policy.kind == "myopic":
        scores = [pen(info_belief(bp, s))
                  for bp, pen, s in zip(policy.params, policy.penalties, states)]
    elif policy.kind == "optimal":
        pos = tuple(sp.state_index(s) for sp, s in zip(policy.joint_spaces, states))
        return int(policy.joint_policy[pos])
    elif policy.kind == "round-robin":
        scores = [s.age for s in states]
    else:
        return NO_UPDATE
    return int(np.argmax(scores))
