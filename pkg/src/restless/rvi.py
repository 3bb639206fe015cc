"""Relative value iteration for the average-penalty scheduling problems.

Two problems share the machinery: the single-source problem with a service
charge on updates (whose greedy policy yields sampling regions and, via
bisection on the charge, reference index values), and the exact joint problem
over M <= 3 sources where the action picks which source to update.

Periodicity note: an oscillating source under an always-passive policy cycles
deterministically, which can keep plain value iteration from settling.  Both
solvers therefore iterate a lazy variant of the dynamics (stay put with
probability one half, move as specified otherwise).  This leaves the average
penalty and the greedy action choices untouched and halves the bias scale, so
reported values are rescaled back on the way out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from restless.belief import BanditParams, InfoState, TruncatedSpace, equilibrium
from restless.hitting import SamplingRegion
from restless.penalty import Penalty

# Q-values closer than this are a tie, and ties go to the passive action
# (or the lowest process index in the joint problem).
TIE_TOL = 1e-10

DEFAULT_EPS = 1e-9
MAX_ITER_SINGLE = 10 ** 6
MAX_ITER_JOINT = 10 ** 5
JOINT_STATE_GUARD = 10 ** 6
ORACLE_WIDTH = 1e-7


class NonConvergence(RuntimeError):
    """Iteration budget exhausted before the span dropped below eps."""

    def __init__(self, message, span):
        super().__init__(message)
        self.span = span


@dataclass(frozen=True)
class SingleBanditMDP:
    """One source, its penalty, and the per-update service charge."""

    params: BanditParams
    penalty: Penalty
    charge: float
    space: TruncatedSpace


@dataclass
class RviSolution:
    """Converged solution: average penalty g, relative values V, greedy policy.

    For the single-source problem V is indexed by sorted belief position and
    anchored so the fresh (last=0, age=1) state has value 0; policy is 1 where
    the greedy action updates.  For the joint problem V and policy have one
    axis per source and policy holds the process index to update.
    """

    g: float
    V: np.ndarray
    policy: np.ndarray
    iterations: int
    span: float


def _rvi_loop(op, n_states, eps, max_iter, v0):
    """Run V <- op(V) - max(op(V) - V) until span(op(V) - V) settles."""
    V = np.zeros(n_states) if v0 is None else np.array(v0, dtype=np.float64).ravel()
    for it in range(1, max_iter + 1):
        LV = op(V)
        diff = LV - V
        hi = float(diff.max())
        span = hi - float(diff.min())
        V = LV - hi
        if span <= eps:
            return V, hi, it, span
    raise NonConvergence(f"no convergence after {max_iter} iterations, span={span:.3e}", span)


def solve_single(mdp: SingleBanditMDP, eps: float = DEFAULT_EPS,
                 max_iter: int = MAX_ITER_SINGLE, v_init: Optional[np.ndarray] = None) -> RviSolution:
    """Solve one source's average-penalty problem at the given service charge.

    v_init may carry the V of a previous solution (e.g. at a nearby charge) to
    warm-start the iteration.
    """
    if eps <= 0.0:
        raise ValueError(f"eps must be > 0, got {eps}")
    space = mdp.space
    w = space.beliefs
    H = np.asarray(mdp.penalty(w), dtype=np.float64)
    succ = space.passive_succ
    i0, i1 = space.idx_fresh0, space.idx_fresh1
    charge = mdp.charge

    def op(V):
        active = charge + 0.5 * V + 0.5 * (w * V[i1] + (1.0 - w) * V[i0])
        passive = 0.5 * V + 0.5 * V[succ]
        return H + np.minimum(active, passive)

    v0 = None if v_init is None else 2.0 * np.asarray(v_init, dtype=np.float64)
    V, g, iterations, span = _rvi_loop(op, space.size, eps, max_iter, v0)

    q_active = charge + 0.5 * V + 0.5 * (w * V[i1] + (1.0 - w) * V[i0])
    q_passive = 0.5 * V + 0.5 * V[succ]
    policy = (q_active < q_passive - TIE_TOL).astype(np.int8)

    V_out = 0.5 * (V - V[i0])
    return RviSolution(g=g, V=V_out, policy=policy, iterations=iterations, span=span)


def extract_region(sol: RviSolution, space: TruncatedSpace) -> SamplingRegion:
    """Thresholds of the greedy policy's update region.

    The active states must occupy one contiguous run of the belief-sorted
    order; anything else means the solve is inconsistent with the threshold
    structure and is reported as an error rather than patched over.  The
    returned bounds sit on the bracketing passive states (0 and 1 when the run
    touches an end), so boundary beliefs themselves stay passive.
    """
    act = np.flatnonzero(sol.policy)
    if act.size == 0:
        ws = space.equilibrium
        return SamplingRegion(ws, ws)
    if int(act[-1]) - int(act[0]) + 1 != act.size:
        raise ValueError(
            f"active states are not contiguous in belief order: positions {act.tolist()}"
        )
    lo = 0.0 if act[0] == 0 else float(space.beliefs[act[0] - 1])
    up = 1.0 if act[-1] == space.size - 1 else float(space.beliefs[act[-1] + 1])
    return SamplingRegion(lo, up)


def whittle_bisection_oracle(params: BanditParams, penalty: Penalty, space: TruncatedSpace,
                             s: InfoState, lam_hi: Optional[float] = None,
                             width: float = ORACLE_WIDTH, eps: float = DEFAULT_EPS) -> float:
    """Reference index of a state: the break-even service charge by bisection.

    Solves the single-source problem along a shrinking charge bracket whose
    low end keeps the state's greedy action active and whose high end keeps it
    passive, then returns the midpoint once the bracket is narrower than
    `width`.  Slow but formula-free; the index table construction is tested
    against it.
    """
    idx = space.state_index(s)
    warm = [None]

    def passive_at(lam: float) -> bool:
        sol = solve_single(SingleBanditMDP(params, penalty, lam, space), eps=eps, v_init=warm[0])
        warm[0] = sol.V
        return sol.policy[idx] == 0

    hi = 1.0 if lam_hi is None else float(lam_hi)
    grow = 0
    while not passive_at(hi):
        hi = max(1.0, hi) * 2.0
        grow += 1
        if grow > 60:
            raise ValueError(f"no passive charge found up to {hi:.3e}")
    lo = 0.0
    if passive_at(lo):
        lo = -1.0
        grow = 0
        while passive_at(lo):
            lo *= 2.0
            grow += 1
            if grow > 60:
                raise ValueError(f"no active charge found down to {lo:.3e}")
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if passive_at(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class JointMDP:
    """Exact scheduling problem over M sources; one must be updated per slot."""

    params: tuple
    penalties: tuple
    spaces: tuple

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(self.params))
        object.__setattr__(self, "penalties", tuple(self.penalties))
        object.__setattr__(self, "spaces", tuple(self.spaces))
        m = len(self.params)
        if not (1 <= m <= 3):
            raise ValueError(f"between 1 and 3 processes supported, got {m}")
        if len(self.penalties) != m or len(self.spaces) != m:
            raise ValueError("params, penalties, and spaces must have equal length")
        n_states = math.prod(sp.size for sp in self.spaces)
        if n_states > JOINT_STATE_GUARD:
            raise ValueError(f"product state space has {n_states} states (> {JOINT_STATE_GUARD})")

    @property
    def n_processes(self) -> int:
        return len(self.params)


def build_joint(params_list, penalty_list, epsilon: float = DEFAULT_EPS,
                max_states: int = 30_000) -> JointMDP:
    """Per-process truncations sized to keep the product space tractable.

    Spaces start at the accuracy-driven cutoff for `epsilon`; while the
    product exceeds max_states the currently largest cutoff is reduced by one.
    Exact joint values are insensitive to the tail states (their beliefs are
    within epsilon of the equilibrium), so trimming the largest space first
    costs the least accuracy.
    """
    from restless.belief import build_space

    spaces = [build_space(bp, epsilon) for bp in params_list]
    while math.prod(sp.size for sp in spaces) > max_states:
        i = max(range(len(spaces)), key=lambda j: spaces[j].F)
        if spaces[i].F <= 1:
            raise ValueError(f"cannot fit product space under {max_states} states")
        spaces[i] = TruncatedSpace(spaces[i].params, spaces[i].F - 1, spaces[i].epsilon)
    return JointMDP(tuple(params_list), tuple(penalty_list), tuple(spaces))


def solve_joint(joint: JointMDP, eps: float = DEFAULT_EPS,
                max_iter: int = MAX_ITER_JOINT) -> RviSolution:
    """Exact optimal average penalty and policy for the joint problem.

    The returned V has one axis per process (sorted belief positions) and is
    anchored at the all-fresh-zero state; policy holds, per joint state, the
    lowest-index process among the tied best to update.
    """
    if eps <= 0.0:
        raise ValueError(f"eps must be > 0, got {eps}")
    m = joint.n_processes
    shape = tuple(sp.size for sp in joint.spaces)

    cost = np.zeros(shape)
    for i, (sp, pen) in enumerate(zip(joint.spaces, joint.penalties)):
        axis_shape = [1] * m
        axis_shape[i] = sp.size
        cost = cost + np.asarray(pen(sp.beliefs)).reshape(axis_shape)

    # per action a: fancy-index tuples sending every other process along its
    # passive successor and process a to its fresh post-update states
    gather1 = []
    gather0 = []
    weights = []
    for a in range(m):
        axes1 = []
        axes0 = []
        for j, sp in enumerate(joint.spaces):
            if j == a:
                axes1.append(np.array([sp.idx_fresh1]))
                axes0.append(np.array([sp.idx_fresh0]))
            else:
                axes1.append(sp.passive_succ)
                axes0.append(sp.passive_succ)
        gather1.append(np.ix_(*axes1))
        gather0.append(np.ix_(*axes0))
        axis_shape = [1] * m
        axis_shape[a] = shape[a]
        weights.append(joint.spaces[a].beliefs.reshape(axis_shape))

    def expected_next(V, a):
        return weights[a] * V[gather1[a]] + (1.0 - weights[a]) * V[gather0[a]]

    def op(V_flat):
        V = V_flat.reshape(shape)
        best = expected_next(V, 0)
        for a in range(1, m):
            np.minimum(best, expected_next(V, a), out=best)
        return (cost + 0.5 * V + 0.5 * best).ravel()

    n_states = math.prod(shape)
    V_flat, g, iterations, span = _rvi_loop(op, n_states, eps, max_iter, None)
    V = V_flat.reshape(shape)

    ev = np.stack([expected_next(V, a) for a in range(m)])
    policy = np.argmax(ev <= ev.min(axis=0) + TIE_TOL, axis=0).astype(np.int8)

    anchor = tuple(sp.idx_fresh0 for sp in joint.spaces)
    V_out = 0.5 * (V - V[anchor])
    return RviSolution(g=g, V=V_out, policy=policy, iterations=iterations, span=span)
