"""Monte-Carlo harness for the slotted remote-monitoring system.

Each slot the scheduler picks one source using only the monitor-side
information states, the hidden chains advance one step, the picked
source's observation arrives at the end of the slot, and every source
is charged its penalty at the belief covering the next hidden state.
Runs are vectorized lane-wise: run r consumes the uniform stream of a
counter-based generator keyed by (seed, r), so reports are bit-identical
for a given scenario regardless of how lanes are batched.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .belief import DEFAULT_EPSILON, BanditParams, InfoState, build_space, equilibrium
from .policy import KINDS, decide
from .rvi import build_joint, solve_joint
from .whittle import build_table, lookup

RVI_EPS = 1e-9


@dataclass(frozen=True)
class Scenario:
    """One experiment: processes, horizon, replication, and policies."""

    processes: tuple
    horizon: int
    runs: int
    seed: int
    policies: tuple
    epsilon: float = DEFAULT_EPSILON
    burn_in: int = 0
    name: str = ""
    debug_belief: bool = False

    def __post_init__(self):
        object.__setattr__(self, "processes", tuple(tuple(pp) for pp in self.processes))
        object.__setattr__(self, "policies", tuple(self.policies))
        if not self.processes:
            raise ValueError("scenario needs at least one process")
        for pp in self.processes:
            if len(pp) != 2 or not isinstance(pp[0], BanditParams):
                raise ValueError("each process is a (BanditParams, penalty) pair")
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if self.runs < 1:
            raise ValueError(f"runs must be >= 1, got {self.runs}")
        if not (0 <= self.burn_in < self.horizon):
            raise ValueError(f"burn_in must lie in [0, horizon), got {self.burn_in}")
        if not (0 <= self.seed < 2 ** 64):
            raise ValueError("seed must fit in 64 bits")
        for kind in self.policies:
            if kind not in KINDS:
                raise ValueError(f"unknown policy kind {kind!r}")
        if "optimal" in self.policies and len(self.processes) > 3:
            raise ValueError("the exact joint solver handles at most 3 processes")

    @property
    def n_processes(self) -> int:
        return len(self.processes)


@dataclass
class SimReport:
    """Per-policy averages plus everything needed to audit them."""

    scenario: Scenario
    means: dict
    per_run: dict
    stderr: dict
    g_star: float = None
    regrets: dict = None
    regret_is_absolute: bool = False
    metadata: dict = field(default_factory=dict)
    belief_stats: dict = None


def regret(report: SimReport, g_star: float) -> dict:
    """Relative excess penalty of each simulated policy over g_star."""
    if g_star <= 0.0:
        raise ValueError(f"relative regret needs g_star > 0, got {g_star:g}")
    return {kind: (mean - g_star) / g_star for kind, mean in report.means.items()}


def _uniform_block(seed: int, runs: int, slots: int, m: int) -> np.ndarray:
    # run r draws from Philox keyed (seed, r); the block layout never
    # affects the per-run streams
    u = np.empty((runs, slots, m))
    for r in range(runs):
        gen = np.random.Generator(np.random.Philox(key=[seed, r]))
        u[r] = gen.random((slots, m))
    return u


class _Arms:
    """Per-process lookup matrices shared by the vectorized policies."""

    def __init__(self, scenario: Scenario):
        self.params = [pp[0] for pp in scenario.processes]
        self.penalties = [pp[1] for pp in scenario.processes]
        self.spaces = [build_space(bp, scenario.epsilon) for bp in self.params]
        self.caps = np.array([sp.F + 1 for sp in self.spaces])
        self.w_star = np.array([equilibrium(bp) for bp in self.params])
        self.p_row = np.array([bp.p for bp in self.params])
        self.stay1_row = np.array([1.0 - bp.q for bp in self.params])
        # penalty at the belief of (last, age), age saturating at F+1;
        # the same matrix scores myopic decisions and accrues penalties
        self.h_mats = []
        for sp, pen in zip(self.spaces, self.penalties):
            mat = np.empty((2, sp.F + 2))
            mat[:, 0] = np.nan
            for last in (0, 1):
                for a in range(1, sp.F + 2):
                    mat[last, a] = pen(sp.chain_belief(last, a))
            self.h_mats.append(mat)

    def whittle_mats(self):
        mats = []
        for sp, bp, pen in zip(self.spaces, self.params, self.penalties):
            table = build_table(bp, pen, space=sp)
            mat = np.empty((2, sp.F + 2))
            mat[:, 0] = np.nan
            for last in (0, 1):
                for a in range(1, sp.F + 2):
                    mat[last, a] = lookup(table, InfoState(last, a))
            mats.append(mat)
        return mats

    def joint_position_mats(self, joint):
        # sim ages (clipped at this space's cap) to positions in the joint
        # solver's own, possibly shorter, truncation
        mats = []
        for sp, jsp in zip(self.spaces, joint.spaces):
            mat = np.empty((2, sp.F + 2), dtype=np.int64)
            mat[:, 0] = -1
            for last in (0, 1):
                for a in range(1, sp.F + 2):
                    mat[last, a] = jsp.state_index(InfoState(last, a))
            mats.append(mat)
        return mats


def _gather(mats, last, age):
    total = mats[0][last[:, 0], age[:, 0]]
    for i in range(1, len(mats)):
        total = total + mats[i][last[:, i], age[:, i]]
    return total


def _simulate_kind(scenario, arms, kind, score_mats=None, joint_pack=None):
    """Per-run time-averaged sum penalties for one policy kind."""
    runs, horizon, m = scenario.runs, scenario.horizon, scenario.n_processes
    u = _uniform_block(scenario.seed, runs, horizon + 1, m)
    lanes = np.arange(runs)

    hidden = (u[:, 0, :] < arms.w_star).astype(np.int64)
    last = hidden.copy()
    age = np.ones((runs, m), dtype=np.int64)
    acc = np.zeros(runs)
    counted = horizon - scenario.burn_in
    if scenario.debug_belief:
        seen = [np.zeros((2, sp.F + 2)) for sp in arms.spaces]
        ones = [np.zeros((2, sp.F + 2)) for sp in arms.spaces]

    if joint_pack is not None:
        pos_mats, policy_flat, sizes = joint_pack

    for t in range(1, horizon + 1):
        if scenario.debug_belief:
            for i in range(m):
                np.add.at(seen[i], (last[:, i], age[:, i]), 1.0)
                np.add.at(ones[i], (last[:, i], age[:, i]), hidden[:, i])
        if kind == "never-sample-proxy":
            act = None
        elif kind == "round-robin":
            act = np.argmax(age, axis=1)
        elif kind == "optimal":
            flat = pos_mats[0][last[:, 0], age[:, 0]]
            for i in range(1, m):
                flat = flat * sizes[i] + pos_mats[i][last[:, i], age[:, i]]
            act = policy_flat[flat]
        else:
            scores = np.stack(
                [score_mats[i][last[:, i], age[:, i]] for i in range(m)], axis=1)
            act = np.argmax(scores, axis=1)
        if act is not None:
            obs = hidden[lanes, act]
        prob1 = np.where(hidden == 1, arms.stay1_row, arms.p_row)
        hidden = (u[:, t, :] < prob1).astype(np.int64)
        age += 1
        np.minimum(age, arms.caps, out=age)
        if act is not None:
            last[lanes, act] = obs
            age[lanes, act] = 1
        if t > scenario.burn_in:
            acc += _gather(arms.h_mats, last, age)

    result = acc / counted
    stats = None
    if scenario.debug_belief:
        stats = {"seen": seen, "ones": ones}
    return result, stats


def run(scenario: Scenario) -> SimReport:
    """Simulate every requested policy and assemble the report.

    When the optimal policy is requested the joint problem is also solved
    exactly; its average penalty g* anchors the per-policy regrets.
    """
    arms = _Arms(scenario)
    need = set(scenario.policies)

    score_mats = {}
    if "whittle" in need:
        score_mats["whittle"] = arms.whittle_mats()
    if "myopic" in need:
        score_mats["myopic"] = arms.h_mats

    g_star = None
    joint_pack = None
    if "optimal" in need:
        joint = build_joint(arms.params, arms.penalties, epsilon=scenario.epsilon)
        sol = solve_joint(joint, eps=RVI_EPS)
        g_star = float(sol.g)
        policy_flat = np.asarray(sol.policy).ravel()
        sizes = [sp.size for sp in joint.spaces]
        joint_pack = (arms.joint_position_mats(joint), policy_flat, sizes)

    means, per_run, stderr, belief_stats = {}, {}, {}, {}
    for kind in scenario.policies:
        values, stats = _simulate_kind(
            scenario, arms, kind,
            score_mats=score_mats.get(kind), joint_pack=joint_pack)
        per_run[kind] = values
        means[kind] = float(values.mean())
        spread = float(values.std(ddof=1)) if scenario.runs > 1 else 0.0
        stderr[kind] = spread / math.sqrt(scenario.runs)
        if stats is not None:
            belief_stats[kind] = stats

    regrets = None
    absolute = False
    if g_star is not None:
        if g_star > 0.0:
            regrets = {k: (v - g_star) / g_star for k, v in means.items()}
        else:
            regrets = {k: v - g_star for k, v in means.items()}
            absolute = True

    metadata = {
        "rng": "philox",
        "rng_split": "run r keyed (seed, r)",
        "epsilon": scenario.epsilon,
        "rvi_eps": RVI_EPS,
        "burn_in": scenario.burn_in,
    }
    return SimReport(
        scenario=scenario, means=means, per_run=per_run, stderr=stderr,
        g_star=g_star, regrets=regrets, regret_is_absolute=absolute,
        metadata=metadata, belief_stats=belief_stats or None)
