"""Hitting times of a belief interval under the passive dynamics.

A threshold policy samples exactly when the belief lies in an open interval
(lower, upper).  Starting from omega and applying tau repeatedly, the hitting
time is the first k with tau^k(omega) inside the interval.  For p+q < 1 the
trajectory is monotone; for p+q > 1 it alternates around the equilibrium, so
the even and odd subsequences are treated as two monotone branches.

All closed forms compute a floor-log candidate and then verify membership
directly with tau_k, walking the candidate by a step or two if rounding put it
on the wrong side of a boundary.  A brute-force iterator doubles as the test
oracle; it either finds the entry, proves the tail stays outside, or refuses
with CapInconclusive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from restless.belief import BanditParams, InfoState, TruncatedSpace, equilibrium, tau, tau_k

INFINITE = math.inf


class CapInconclusive(RuntimeError):
    """Brute force ran out of iterations without a provable answer."""


@dataclass(frozen=True)
class SamplingRegion:
    """Open belief interval (lower, upper) where a policy samples.

    lower == upper encodes the empty region.
    """

    lower: float
    upper: float

    def __post_init__(self):
        if not (0.0 <= self.lower <= self.upper <= 1.0):
            raise ValueError(f"need 0 <= lower <= upper <= 1, got ({self.lower}, {self.upper})")

    def contains(self, omega: float) -> bool:
        return self.lower < omega < self.upper

    @property
    def is_empty(self) -> bool:
        return self.lower == self.upper


def _first_shrink(params: BanditParams, omega: float, k0: int, target: float):
    """Smallest k in {k0, k0+2, ...} with tau_k(omega) strictly between target and w*.

    The subsequence tau^{k0+2n}(omega) stays on one side of the equilibrium and
    its distance shrinks geometrically by (1-p-q)^2 per step, so "entered" is
    just |tau_k - w*| < |target - w*|.  The caller guarantees the subsequence
    and the target are on the same side.
    """
    ws = equilibrium(params)
    dt = abs(target - ws)
    if dt <= 0.0:
        return INFINITE
    d0 = abs(omega - ws) * abs(params.memory) ** k0
    if d0 == 0.0:
        return INFINITE
    s = params.memory ** 2
    if d0 >= dt:
        n = math.floor(math.log(dt / d0) / math.log(s)) + 1
        n = max(0, n - 2)
    else:
        n = 0

    def entered(n):
        return abs(tau_k(params, omega, k0 + 2 * n) - ws) < dt

    while n > 0 and entered(n - 1):
        n -= 1
    while not entered(n):
        n += 1
    return k0 + 2 * n


def _first_cross_monotonic(params: BanditParams, omega: float, target: float) -> int:
    """Smallest k >= 1 with tau_k(omega) strictly past target (monotone chain)."""
    ws = equilibrium(params)
    r = (target - ws) / (omega - ws)
    k = math.floor(math.log(r) / math.log(params.memory)) + 1 if 0.0 < r <= 1.0 else 1
    k = max(1, k - 2)
    dt = abs(target - ws)

    def crossed(k):
        return abs(tau_k(params, omega, k) - ws) < dt

    while k > 1 and crossed(k - 1):
        k -= 1
    while not crossed(k):
        k += 1
    return k


def hit_monotonic(params: BanditParams, omega: float, region: SamplingRegion):
    """Hitting time of the region from omega when p+q < 1.

    Four outcomes: 0 if already inside; a floor-log crossing count when the
    trajectory rises through lower (with lower < w*) or falls through upper
    (with upper > w*); Infinite when the fixed point blocks entry or the fall
    through upper overshoots below lower.
    """
    if not params.is_monotonic:
        raise ValueError(f"p+q must be < 1, got p={params.p}, q={params.q}")
    lo, up = region.lower, region.upper
    if lo < omega < up:
        return 0
    ws = equilibrium(params)
    if omega == ws:
        return INFINITE
    if omega <= lo:
        if lo >= ws:
            # rising trajectory saturates at w* below (or at) lower
            return INFINITE
        k = _first_cross_monotonic(params, omega, lo)
        return k if tau_k(params, omega, k) < up else INFINITE
    # omega >= up
    if up <= ws:
        return INFINITE
    k = _first_cross_monotonic(params, omega, up)
    return k if tau_k(params, omega, k) > lo else INFINITE


def hit_oscillating(params: BanditParams, omega: float, region: SamplingRegion):
    """Hitting time of the region from omega when p+q > 1.

    When the equilibrium lies inside [lower, upper] both alternating branches
    converge into the region, and the answer is the smaller of the two entry
    times.  When the region sits strictly above the equilibrium, only the
    branch above w* can enter, and it may step over the region entirely; a
    region strictly below w* is handled by relabeling the two states, which
    maps the problem onto the previous one.
    """
    if not params.is_oscillating:
        raise ValueError(f"p+q must be > 1, got p={params.p}, q={params.q}")
    lo, up = region.lower, region.upper
    if lo < omega < up:
        return 0
    ws = equilibrium(params)
    if omega == ws:
        return INFINITE

    if lo <= ws <= up:
        if omega <= lo:
            # even iterates rise toward w* (enter above lower); odd fall (enter below upper)
            even = _first_shrink(params, omega, 0, lo)
            odd = _first_shrink(params, omega, 1, up)
        else:
            even = _first_shrink(params, omega, 0, up)
            odd = _first_shrink(params, omega, 1, lo)
        return min(even, odd)

    if ws > up:
        # region entirely below the equilibrium: swap the labels of the two
        # hidden states; the twin chain has parameters (q, p), belief 1-omega,
        # and the mirrored region, with identical hitting times
        twin = BanditParams(params.q, params.p)
        return hit_oscillating(twin, 1.0 - omega, SamplingRegion(1.0 - up, 1.0 - lo))

    # region strictly above the equilibrium (lower > w*)
    if omega >= up:
        k = _first_shrink(params, omega, 0, up)
        return k if tau_k(params, omega, k) > lo else INFINITE
    # omega <= lower
    if omega > ws:
        # one step lands below w*, and every iterate stays below lower
        return INFINITE
    if not (tau_k(params, omega, 1) > lo):
        # the odd branch peaks at its first step; if that misses, everything does
        return INFINITE
    k = _first_shrink(params, omega, 1, up)
    return k if tau_k(params, omega, k) > lo else INFINITE


def hit_bruteforce(params: BanditParams, omega: float, region: SamplingRegion, cap: int):
    """Iterate tau and report the first entry; the reference the closed forms are tested against.

    After cap steps without entry, every later iterate is within
    |1-p-q|^cap * |omega - w*| of the equilibrium.  If that ball is clear of
    the region the answer is Infinite; otherwise raises CapInconclusive.
    """
    if cap < 1:
        raise ValueError(f"cap must be >= 1, got {cap}")
    lo, up = region.lower, region.upper
    ws = equilibrium(params)
    # distance from the equilibrium to the region when w* is outside it; once
    # the trajectory is inside that ball it can never enter, so Infinite is
    # provable early instead of spinning out the remaining iterations
    nearest = lo - ws if ws <= lo else ws - up if ws >= up else None
    p, mem = params.p, params.memory
    w = omega
    for k in range(cap + 1):
        if lo < w < up:
            return k
        if nearest is not None and abs(w - ws) <= nearest:
            return INFINITE
        w = p + w * mem
    if lo < ws < up:
        raise CapInconclusive(
            f"no entry in {cap} steps but the equilibrium {ws:.6g} is inside ({lo:.6g}, {up:.6g})"
        )
    raise CapInconclusive(
        f"no entry in {cap} steps; tail within "
        f"{abs(mem) ** cap * abs(omega - ws):.3g} of w* but the region is {nearest:.3g} away"
    )


def discrete_hit(space: TruncatedSpace, start: InfoState, active_set):
    """Steps until a state of the truncated space first lies in active_set.

    Ages advance one per step and saturate at the equilibrium state, which is
    absorbing; if the walk is absorbed outside active_set the time is
    Infinite.  States in active_set may be given with any age beyond the
    cutoff to mean the equilibrium state.
    """
    active_idx = {space.state_index(s) for s in active_set}
    idx = space.state_index(start)
    k = 0
    while True:
        if idx in active_idx:
            return k
        if idx == space.eq_index:
            return INFINITE
        idx = space.passive_succ[idx]
        k += 1
