"""Belief-state dynamics of a two-state Markov source observed through updates.

A source flips 0 -> 1 with probability p and 1 -> 0 with probability q each
slot.  A monitor that saw the state n slots ago summarizes its knowledge in the
belief omega = P[state is 1 now].  Everything here is closed-form: n-step
transition probabilities, the passive one-step operator tau, its k-step
iterates, the equilibrium belief, and a finite truncation of the reachable
belief set used by the solvers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

# Beliefs this close to another belief make the sorted state list ambiguous.
COLLISION_TOL = 1e-13

DEFAULT_EPSILON = 1e-9


@dataclass(frozen=True)
class BanditParams:
    """Transition probabilities of one binary source.

    p: probability of 0 -> 1 in one slot.
    q: probability of 1 -> 0 in one slot.

    p + q = 1 is rejected: the belief then forgets the last observation in a
    single step and every scheduling decision is vacuous.
    """

    p: float
    q: float

    def __post_init__(self):
        if not (0.0 < self.p < 1.0 and 0.0 < self.q < 1.0):
            raise ValueError(f"p and q must lie strictly in (0,1), got p={self.p}, q={self.q}")
        if self.p + self.q == 1.0:
            raise ValueError(f"p + q = 1 is degenerate (belief is memoryless), got p={self.p}, q={self.q}")

    @property
    def memory(self) -> float:
        """1 - p - q, the geometric factor of belief convergence."""
        return 1.0 - self.p - self.q

    @property
    def is_monotonic(self) -> bool:
        return self.p + self.q < 1.0

    @property
    def is_oscillating(self) -> bool:
        return self.p + self.q > 1.0


def equilibrium(params: BanditParams) -> float:
    """Stationary probability of state 1; the unique fixed point of tau."""
    return params.p / (params.p + params.q)


def n_step(params: BanditParams, n: int):
    """(p_n, q_n): n-step transition probabilities 0->1 and 1->0."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if n == 1:
        return params.p, params.q
    p, q = params.p, params.q
    bn = params.memory ** n
    return (p - p * bn) / (p + q), (q - q * bn) / (p + q)


def tau(params: BanditParams, omega: float) -> float:
    """One passive step of the belief: omega -> p + omega(1-p-q)."""
    return params.p + omega * params.memory


def tau_k(params: BanditParams, omega: float, k: int) -> float:
    """k passive steps in closed form: w* + (omega - w*)(1-p-q)^k."""
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    if k == 0:
        return omega
    ws = equilibrium(params)
    return ws + (omega - ws) * params.memory ** k


@dataclass(frozen=True)
class InfoState:
    """What the monitor knows about one source: last observed state and its age.

    age counts slots since the observation was taken; a source observed at the
    start of the current slot has age 1.  Inside a TruncatedSpace of cutoff F
    the age saturates at F+1, where the belief is pinned to the equilibrium.
    """

    last: int
    age: int

    def __post_init__(self):
        if self.last not in (0, 1):
            raise ValueError(f"last must be 0 or 1, got {self.last}")
        if self.age < 1:
            raise ValueError(f"age must be >= 1, got {self.age}")


def info_belief(params: BanditParams, s: InfoState) -> float:
    """Exact belief of an InfoState (no truncation): p^(age) or 1 - q^(age)."""
    pn, qn = n_step(params, s.age)
    return pn if s.last == 0 else 1.0 - qn


class TruncatedSpace:
    """Finite belief space: {p^(1..F), w*, 1-q^(F..1)} sorted by belief value.

    Ages beyond F collapse to the equilibrium state, so the space has exactly
    2F+1 members.  Construction fails loudly if two members land within
    COLLISION_TOL of each other; downstream index construction relies on the
    sort order being unambiguous.
    """

    def __init__(self, params: BanditParams, cutoff: int, epsilon: float):
        if cutoff < 1:
            raise ValueError(f"cutoff must be >= 1 (epsilon too coarse), got {cutoff}")
        self.params = params
        self.F = cutoff
        self.epsilon = epsilon
        ws = equilibrium(params)
        self.equilibrium = ws

        # (belief, last, age); the saturated state carries last=-1, age=F+1.
        raw = []
        for age in range(1, cutoff + 1):
            pn, qn = n_step(params, age)
            raw.append((pn, 0, age))
            raw.append((1.0 - qn, 1, age))
        raw.append((ws, -1, cutoff + 1))
        raw.sort(key=lambda t: t[0])

        beliefs = np.array([t[0] for t in raw])
        gaps = np.diff(beliefs)
        if np.any(gaps < COLLISION_TOL):
            i = int(np.argmin(gaps))
            raise ValueError(
                "belief collision in truncated space: "
                f"{raw[i]} and {raw[i + 1]} differ by {gaps[i]:.3e} < {COLLISION_TOL:g}"
            )

        self.beliefs = beliefs
        self.tags = [(t[1], t[2]) for t in raw]
        self.eq_index = next(i for i, t in enumerate(raw) if t[1] == -1)

        # position of (last, age) in the sorted order; saturated age -> eq_index
        self._pos = {}
        for i, (last, age) in enumerate(self.tags):
            if last >= 0:
                self._pos[(last, age)] = i

        # passive successor (age+1, saturating) of each sorted position
        succ = np.empty(2 * cutoff + 1, dtype=np.int64)
        for i, (last, age) in enumerate(self.tags):
            if last == -1 or age >= cutoff:
                succ[i] = self.eq_index
            else:
                succ[i] = self._pos[(last, age + 1)]
        self.passive_succ = succ
        self.idx_fresh0 = self._pos[(0, 1)]  # belief p
        self.idx_fresh1 = self._pos[(1, 1)]  # belief 1-q

    @property
    def size(self) -> int:
        return 2 * self.F + 1

    def state_index(self, s: InfoState) -> int:
        """Sorted position of an InfoState, saturating ages beyond F."""
        if s.age > self.F:
            return self.eq_index
        return self._pos[(s.last, s.age)]

    def belief_of(self, s: InfoState) -> float:
        return self.beliefs[self.state_index(s)]

    def info_at(self, i: int) -> Optional[InfoState]:
        """InfoState tag at sorted position i; None for the equilibrium state."""
        last, age = self.tags[i]
        return None if last == -1 else InfoState(last, age)

    def chain_belief(self, last: int, age: int) -> float:
        """Belief of (last, age) under truncation: ages > F give w* exactly."""
        if age > self.F:
            return self.equilibrium
        return self.beliefs[self._pos[(last, age)]]

    def __repr__(self):
        return (f"TruncatedSpace(p={self.params.p}, q={self.params.q}, "
                f"F={self.F}, size={self.size})")


def build_space(params: BanditParams, epsilon: float = DEFAULT_EPSILON) -> TruncatedSpace:
    """Smallest truncation F with |p^(F) - w*| < epsilon and |1 - q^(F) - w*| < epsilon.

    |p^(F) - w*| = w*|1-p-q|^F and |1-q^(F) - w*| = (1-w*)|1-p-q|^F, so F comes
    from a log inequality; it is then verified (and nudged if rounding moved
    it) by direct evaluation.
    """
    if epsilon <= 0.0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    ws = equilibrium(params)
    coeff = max(ws, 1.0 - ws)
    ab = abs(params.memory)
    if coeff < epsilon:
        raise ValueError(
            f"epsilon={epsilon:g} is coarser than the one-step beliefs themselves; no F >= 1 is needed"
        )
    # smallest F with coeff * ab^F < epsilon
    F = max(1, math.ceil(math.log(epsilon / coeff) / math.log(ab)))
    while coeff * ab ** F >= epsilon:
        F += 1
    while F > 1 and coeff * ab ** (F - 1) < epsilon:
        F -= 1
    return TruncatedSpace(params, F, epsilon)


def epsilon_for_cutoff(params: BanditParams, cutoff: int) -> float:
    """An epsilon for which build_space returns exactly `cutoff` (test helper)."""
    ws = equilibrium(params)
    coeff = max(ws, 1.0 - ws)
    return coeff * abs(params.memory) ** cutoff * (1.0 + 1e-12)
