"""Whittle index tables over the truncated belief space.

Indexability lets the scheduler price every information state of every
process separately: the index of a state is the service charge at which
the optimal single-process policy becomes indifferent between updating
and idling there.  Because optimal policies are threshold policies, the
set of still-active states shrinks from the outside in as the charge
grows, so the table builder repeatedly prices the two extremes of the
active belt with closed-form expressions and retires the cheaper one.
No value iteration is involved; the rvi module provides an independent
bisection oracle for cross-checking.
"""

import math
from dataclasses import dataclass

import numpy as np

from .belief import DEFAULT_EPSILON, BanditParams, InfoState, TruncatedSpace, build_space
from .hitting import INFINITE, discrete_hit

# candidates whose computed indices differ by less than this are placed as a
# tie, lower-belief state first
CANDIDATE_TIE_TOL = 1e-12

# closed forms divide by policy-dependent quantities; anything this small
# means the step is degenerate and the table cannot be trusted
DEGENERATE_DENOMINATOR = 1e-14

# Ordering floor for the finished table.  Belief truncation perturbs the
# index fine structure near the saturation seam: states whose beliefs sit
# within the resolution of the equilibrium carry closed-form values that
# can interleave.  The noise scale grows with the cutoff and with the
# overall index magnitude, and build_table widens this floor accordingly.
# Decreases beyond the widened tolerance indicate a genuine formula or
# driver bug; decreases within it are flattened to a running maximum.
ORDER_SLACK = 1e-6


@dataclass
class IndexTable:
    """Belief states of one process ordered by nondecreasing Whittle index.

    order holds positions into the space's sorted state list, from the
    smallest index to the largest; indices holds the matching index values.
    equilibrium_position is the placement position of the equilibrium
    state, after which an oscillating table plateaus.
    """

    space: TruncatedSpace
    order: np.ndarray
    indices: np.ndarray
    equilibrium_position: int

    def __post_init__(self):
        by_state = np.empty(self.space.size, dtype=np.float64)
        by_state[self.order] = self.indices
        self._by_state = by_state

    def index_of_state(self, i: int) -> float:
        """Index of the space's i-th sorted state."""
        return float(self._by_state[i])


def lookup(table: IndexTable, s: InfoState) -> float:
    """Whittle index of an information state; ages beyond the cutoff share
    the equilibrium state's value."""
    return table.index_of_state(table.space.state_index(s))


def candidate_pair(space: TruncatedSpace, placed) -> tuple:
    """Extremes of the unplaced belt, as positions in the sorted state list.

    Every placement consumes an extreme, so the unplaced states always form
    a contiguous run; the next state to retire must be one of its ends.
    """
    free = np.flatnonzero(~np.asarray(placed, dtype=bool))
    if free.size == 0:
        raise ValueError("no unplaced states remain")
    return int(free[0]), int(free[-1])


def _state_at(space: TruncatedSpace, i: int) -> InfoState:
    # canonical InfoState for a sorted-space position; the equilibrium state
    # is represented by a saturated age
    last, age = space.tags[i]
    if last == -1:
        return InfoState(0, space.F + 1)
    return InfoState(last, age)


def _fresh_sojourns(space: TruncatedSpace, placed):
    """Slots the two fresh states spend before reaching an unplaced state.

    Returns hitting time + 1 for the walks started at belief p and at
    belief 1-q, the quantities the pricing formulas are written in.  A walk
    absorbed inside the retired set yields inf; the boundary forms cap it
    at the cutoff, where the saturated tail terms vanish anyway.
    """
    active = [_state_at(space, i) for i in np.flatnonzero(~placed)]
    l0 = discrete_hit(space, InfoState(0, 1), active)
    l1 = discrete_hit(space, InfoState(1, 1), active)
    return l0 + 1, l1 + 1


def _chain_terms(space: TruncatedSpace, penalty, l0, l1):
    """Shared building blocks of the closed forms for a given passive policy.

    sum0/sum1 accumulate penalties along the fresh trajectories, p_end and
    q_end are the transition probabilities at the sojourn horizons.
    """
    if not (math.isfinite(l0) and math.isfinite(l1)):
        raise ValueError("interior index form needs both fresh walks to reach "
                         "the active belt")
    l0, l1 = int(l0), int(l1)
    sum0 = sum(penalty(space.chain_belief(0, k)) for k in range(1, l0 + 1))
    sum1 = sum(penalty(space.chain_belief(1, k)) for k in range(1, l1 + 1))
    p_end = space.chain_belief(0, l0)
    q_end = 1.0 - space.chain_belief(1, l1)
    b = l1 * p_end + l0 * q_end
    c = l0 * sum1 - l1 * sum0
    g = p_end * sum1 + q_end * sum0
    return sum0, sum1, p_end, q_end, b, c, g


def _one_step_index(space, penalty, l0, l1, x_belief, tau1) -> float:
    _, _, p_end, q_end, b, c, g = _chain_terms(space, penalty, l0, l1)
    den = (x_belief - tau1) * (l0 - l1) + q_end + p_end
    if abs(den) < DEGENERATE_DENOMINATOR:
        raise ValueError("degenerate denominator in one-step index form")
    return (b * penalty(tau1) - g - (x_belief - tau1) * c) / den


def _two_step_index(space, penalty, l0, l1, x_belief, tau1, tau2) -> float:
    _, _, p_end, q_end, b, c, g = _chain_terms(space, penalty, l0, l1)
    den = (x_belief - tau2) * (l0 - l1) + 2.0 * (q_end + p_end)
    if abs(den) < DEGENERATE_DENOMINATOR:
        raise ValueError("degenerate denominator in two-step index form")
    num = b * (penalty(tau1) + penalty(tau2)) - 2.0 * g - (x_belief - tau2) * c
    return num / den


def _succ_belief(space: TruncatedSpace, x: InfoState, steps: int = 1) -> float:
    # belief after a few passive slots, saturating at the equilibrium
    if x.age > space.F:
        return space.beliefs[space.eq_index]
    return space.chain_belief(x.last, x.age + steps)


def index_monotonic_interior(params: BanditParams, penalty, space: TruncatedSpace,
                             placed, x: InfoState) -> float:
    """Index of x while the equilibrium still lies inside the active belt,
    for a monotonic process."""
    l0, l1 = _fresh_sojourns(space, placed)
    x_belief = space.belief_of(x)
    tau1 = _succ_belief(space, x, 1)
    return _one_step_index(space, penalty, l0, l1, x_belief, tau1)


def index_monotonic_boundary(params: BanditParams, penalty, space: TruncatedSpace,
                             placed, x: InfoState, side: str) -> float:
    """Index of x once the active belt sits entirely on one fresh branch.

    Samples whose outcome lands on the exhausted branch drift passively to
    the equilibrium; outcomes on the belt's own branch walk back into it.
    The belt end adjacent to its fresh state is priced against its direct
    successor, the end near the equilibrium against the renewal cycle at
    the walk's re-entry state.  Which form serves which end follows from
    which branch still holds the belt.
    """
    if side not in ("lower", "upper"):
        raise ValueError("side must be 'lower' or 'upper'")
    l0, l1 = _fresh_sojourns(space, placed)
    w_star = space.beliefs[space.eq_index]
    h_star = penalty(w_star)
    x_belief = space.belief_of(x)
    if math.isinf(l0):
        # belt on the branch entered through fresh state one
        l1 = space.F + 1 if math.isinf(l1) else int(l1)
        sum1 = sum(penalty(space.chain_belief(1, k)) - h_star for k in range(1, l1 + 1))
        q_end = 1.0 - space.chain_belief(1, l1)
        if side == "lower":
            drift = sum(penalty(_succ_belief(space, x, k)) - penalty(space.chain_belief(0, k))
                        for k in range(1, space.F + 1))
            den = q_end + x_belief
            if abs(den) < DEGENERATE_DENOMINATOR:
                raise ValueError("degenerate denominator in lower boundary form")
            return (q_end * drift - x_belief * sum1) / den
        tau1 = _succ_belief(space, x, 1)
        den = x_belief - tau1
        if abs(den) < DEGENERATE_DENOMINATOR:
            raise ValueError("degenerate denominator in upper boundary form")
        return (q_end * (penalty(tau1) - h_star) - den * sum1) / den
    if not math.isinf(l1):
        raise ValueError("boundary index form needs one exhausted fresh walk")
    # belt on the branch entered through fresh state zero
    l0 = space.F + 1 if math.isinf(l0) else int(l0)
    sum0 = sum(penalty(space.chain_belief(0, k)) - h_star for k in range(1, l0 + 1))
    p_end = space.chain_belief(0, l0)
    if side == "upper":
        drift = sum(penalty(_succ_belief(space, x, k)) - penalty(space.chain_belief(1, k))
                    for k in range(1, space.F + 1))
        den = p_end + 1.0 - x_belief
        if abs(den) < DEGENERATE_DENOMINATOR:
            raise ValueError("degenerate denominator in upper boundary form")
        return (p_end * drift - (1.0 - x_belief) * sum0) / den
    tau1 = _succ_belief(space, x, 1)
    den = tau1 - x_belief
    if abs(den) < DEGENERATE_DENOMINATOR:
        raise ValueError("degenerate denominator in lower boundary form")
    return (x_belief * (penalty(tau1) - h_star) - den * sum0) / den


def index_final(params: BanditParams, penalty, space: TruncatedSpace,
                placed, x: InfoState) -> float:
    """Index of the last remaining state once every other state is retired.

    For a fresh-walk state, exactly one of the two walks can return to the
    lone active state; a sample whose outcome lands on the other branch
    drifts to the equilibrium and never samples again, and the matching
    boundary form prices that balance with the walk ending at the state
    itself.  For the equilibrium state both walks return, which is the
    interior renewal with the state as its own successor.
    """
    if x.age > space.F:
        l0, l1 = _fresh_sojourns(space, placed)
        w_star = space.beliefs[space.eq_index]
        return _one_step_index(space, penalty, l0, l1, w_star, w_star)
    side = "lower" if x.last == 1 else "upper"
    return index_monotonic_boundary(params, penalty, space, placed, x, side)


def index_oscillating(params: BanditParams, penalty, space: TruncatedSpace,
                      placed, x: InfoState) -> float:
    """Index of x for an oscillating process before the plateau.

    If one passive slot already lands inside the retired set the pricing
    must look two slots ahead, because the trajectory re-enters the active
    belt on the rebound.
    """
    l0, l1 = _fresh_sojourns(space, placed)
    x_belief = space.belief_of(x)
    xi = space.state_index(x)
    succ = space.passive_succ[xi]
    tau1 = space.beliefs[succ]
    if placed[succ]:
        tau2 = space.beliefs[space.passive_succ[succ]]
        return _two_step_index(space, penalty, l0, l1, x_belief, tau1, tau2)
    return _one_step_index(space, penalty, l0, l1, x_belief, tau1)


def _place(order, indices, placed, pos, value):
    order.append(pos)
    indices.append(value)
    placed[pos] = True


def build_table(params: BanditParams, penalty, epsilon: float = DEFAULT_EPSILON,
                space: TruncatedSpace = None) -> IndexTable:
    """Price every truncated belief state and return the ordered table.

    Monotonic processes follow the two-phase sweep: interior pricing while
    the fresh walk can still reach the belt within the cutoff, boundary
    pricing afterwards.  Oscillating processes price interior states until
    the equilibrium retires, then the plateau rule applies and only the
    final state needs the boundary form.
    """
    if space is None:
        space = build_space(params, epsilon)
    n = space.size
    placed = np.zeros(n, dtype=bool)
    order, indices = [], []

    def pick(lo, w_lo, hi, w_hi):
        # ties go to the lower-belief state; the later twin keeps its value
        if w_lo <= w_hi + CANDIDATE_TIE_TOL:
            _place(order, indices, placed, lo, w_lo)
        else:
            _place(order, indices, placed, hi, w_hi)

    try:
        if params.is_monotonic:
            _build_monotonic(params, penalty, space, placed, order, indices, pick)
        else:
            _build_oscillating(params, penalty, space, placed, order, indices, pick)
    except ValueError as err:
        raise ValueError(f"placement step {len(order) + 1}: {err}") from err

    indices_arr = np.asarray(indices)
    drops = np.diff(indices_arr)
    envelope = 50.0 * space.epsilon * space.F * space.F
    slack = max(ORDER_SLACK, envelope) * max(1.0, float(np.abs(indices_arr).max()))
    if drops.size and float(drops.min()) < -slack:
        worst = int(drops.argmin())
        raise ValueError(
            "index ordering violated at placement %d: %.3e after %.3e"
            % (worst + 2, indices_arr[worst + 1], indices_arr[worst]))
    # flatten seam-scale interleaving so the table is exactly nondecreasing
    indices_arr = np.maximum.accumulate(indices_arr)
    eq_pos = order.index(space.eq_index)
    return IndexTable(space, np.asarray(order), indices_arr, eq_pos)


def _build_monotonic(params, penalty, space, placed, order, indices, pick):
    while placed.sum() < space.size - 1:
        l0, l1 = _fresh_sojourns(space, placed)
        if math.isinf(l0) or math.isinf(l1):
            break
        lo, hi = candidate_pair(space, placed)
        w_lo = index_monotonic_interior(params, penalty, space, placed, _state_at(space, lo))
        w_hi = index_monotonic_interior(params, penalty, space, placed, _state_at(space, hi))
        pick(lo, w_lo, hi, w_hi)
    while placed.sum() < space.size - 1:
        lo, hi = candidate_pair(space, placed)
        w_lo = index_monotonic_boundary(params, penalty, space, placed,
                              _state_at(space, lo), "lower")
        w_hi = index_monotonic_boundary(params, penalty, space, placed,
                              _state_at(space, hi), "upper")
        pick(lo, w_lo, hi, w_hi)
    last = int(np.flatnonzero(~placed)[0])
    w_last = index_final(params, penalty, space, placed, _state_at(space, last))
    _place(order, indices, placed, last, w_last)


def _build_oscillating(params, penalty, space, placed, order, indices, pick):
    while placed.sum() < space.size - 1 and not placed[space.eq_index]:
        lo, hi = candidate_pair(space, placed)
        w_lo = index_oscillating(params, penalty, space, placed, _state_at(space, lo))
        w_hi = index_oscillating(params, penalty, space, placed, _state_at(space, hi))
        pick(lo, w_lo, hi, w_hi)
    if placed[space.eq_index]:
        plateau = indices[order.index(space.eq_index)]
        w_star = space.beliefs[space.eq_index]
        while placed.sum() < space.size - 2:
            lo, hi = candidate_pair(space, placed)
            # plateau ties retire from the equilibrium belief outward
            if abs(space.beliefs[lo] - w_star) >= abs(space.beliefs[hi] - w_star):
                _place(order, indices, placed, hi, plateau)
            else:
                _place(order, indices, placed, lo, plateau)
        if placed.sum() == space.size - 2:
            lo, hi = candidate_pair(space, placed)
            w_lo = _final_if_last(params, penalty, space, placed, lo, hi)
            w_hi = _final_if_last(params, penalty, space, placed, hi, lo)
            # whichever of the two prices higher with everything else
            # retired is the true last state; its partner joins the plateau
            if w_lo >= w_hi:
                _place(order, indices, placed, hi, plateau)
            else:
                _place(order, indices, placed, lo, plateau)
    last = int(np.flatnonzero(~placed)[0])
    w_last = index_final(params, penalty, space, placed, _state_at(space, last))
    _place(order, indices, placed, last, w_last)


def _final_if_last(params, penalty, space, placed, pos, other):
    """Value pos would take as the final state, with other already retired."""
    placed[other] = True
    try:
        return index_final(params, penalty, space, placed, _state_at(space, pos))
    finally:
        placed[other] = False
