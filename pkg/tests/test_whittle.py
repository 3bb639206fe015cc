"""Index tables: closed-form pricing cross-checked against the solver oracle."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from restless.belief import BanditParams, InfoState, build_space
from restless.penalty import make_penalty
from restless.rvi import whittle_bisection_oracle
from restless.whittle import (
    IndexTable,
    build_table,
    candidate_pair,
    index_final,
    index_monotonic_boundary,
    index_monotonic_interior,
    lookup,
)

ENTROPY = make_penalty("entropy")


def small_params_strategy():
    # keep the cutoff modest so table builds stay cheap under hypothesis
    def ok(t):
        p, q = t
        return 0.05 <= abs(1.0 - p - q) <= 0.7

    return st.tuples(
        st.floats(min_value=0.02, max_value=0.98),
        st.floats(min_value=0.02, max_value=0.98),
    ).filter(ok).map(lambda t: BanditParams(*t))


class TestCandidatePair:
    def setup_method(self):
        self.space = build_space(BanditParams(0.05, 0.2), 1e-4)

    def test_nothing_placed_returns_extremes(self):
        placed = np.zeros(self.space.size, dtype=bool)
        assert candidate_pair(self.space, placed) == (0, self.space.size - 1)

    def test_single_remaining_state_twice(self):
        placed = np.ones(self.space.size, dtype=bool)
        placed[3] = False
        assert candidate_pair(self.space, placed) == (3, 3)

    def test_contiguous_belt_endpoints(self):
        placed = np.zeros(self.space.size, dtype=bool)
        placed[:2] = True
        placed[-1] = True
        assert candidate_pair(self.space, placed) == (2, self.space.size - 2)

    def test_exhausted_raises(self):
        placed = np.ones(self.space.size, dtype=bool)
        with pytest.raises(ValueError):
            candidate_pair(self.space, placed)


class TestClosedForms:
    def test_first_placement_is_smallest_index(self):
        bp = BanditParams(0.05, 0.2)
        sp = build_space(bp, 1e-6)
        placed = np.zeros(sp.size, dtype=bool)
        w_lo = index_monotonic_interior(bp, ENTROPY, sp, placed, InfoState(0, 1))
        w_hi = index_monotonic_interior(bp, ENTROPY, sp, placed, InfoState(1, 1))
        table = build_table(bp, ENTROPY, epsilon=1e-6)
        assert table.indices[0] == pytest.approx(min(w_lo, w_hi), abs=1e-12)

    def test_boundary_needs_an_exhausted_walk(self):
        bp = BanditParams(0.05, 0.2)
        sp = build_space(bp, 1e-6)
        placed = np.zeros(sp.size, dtype=bool)
        with pytest.raises(ValueError):
            index_monotonic_boundary(bp, ENTROPY, sp, placed, InfoState(0, 1), "lower")

    def test_boundary_rejects_unknown_side(self):
        bp = BanditParams(0.05, 0.2)
        sp = build_space(bp, 1e-6)
        placed = np.zeros(sp.size, dtype=bool)
        with pytest.raises(ValueError):
            index_monotonic_boundary(bp, ENTROPY, sp, placed, InfoState(0, 1), "middle")

    def test_final_state_form_matches_table(self):
        bp = BanditParams(0.05, 0.2)
        table = build_table(bp, ENTROPY, epsilon=1e-6)
        sp = table.space
        placed = np.ones(sp.size, dtype=bool)
        last_pos = int(table.order[-1])
        placed[last_pos] = False
        tag = sp.tags[last_pos]
        last_state = InfoState(0, sp.F + 1) if tag[0] == -1 else InfoState(*tag)
        w = index_final(bp, ENTROPY, sp, placed, last_state)
        assert table.indices[-1] == pytest.approx(w, abs=1e-9)

    def test_matches_oracle_on_small_monotonic_instance(self):
        bp = BanditParams(0.45, 0.51)
        sp = build_space(bp, 1e-9)
        table = build_table(bp, ENTROPY, space=sp)
        for pos in range(sp.size):
            tag = sp.tags[pos]
            s = InfoState(0, sp.F + 1) if tag[0] == -1 else InfoState(*tag)
            w = whittle_bisection_oracle(bp, ENTROPY, sp, s, eps=1e-7)
            assert table.index_of_state(pos) == pytest.approx(w, abs=1e-5)

    def test_matches_oracle_on_small_oscillating_instance(self):
        bp = BanditParams(0.53, 0.51)
        sp = build_space(bp, 1e-9)
        table = build_table(bp, ENTROPY, space=sp)
        for pos in range(sp.size):
            tag = sp.tags[pos]
            s = InfoState(0, sp.F + 1) if tag[0] == -1 else InfoState(*tag)
            w = whittle_bisection_oracle(bp, ENTROPY, sp, s, eps=1e-7)
            assert table.index_of_state(pos) == pytest.approx(w, abs=1e-5)


class TestFrozenValues:
    """Literals frozen from the bisection oracle run at width 1e-7."""

    def test_monotonic_reference_instance(self):
        bp = BanditParams(0.05, 0.2)
        sp = build_space(bp, 1e-9)
        table = build_table(bp, ENTROPY, space=sp)
        assert sp.F == 72
        expect = {
            (0, 1): 0.1198961,
            (0, 2): 0.2556930,
            (1, 1): 0.3225111,
            (1, 5): 1.1071270,
            (1, 4): 1.1218726,
        }
        for (last, age), w in expect.items():
            assert lookup(table, InfoState(last, age)) == pytest.approx(w, abs=2e-6)
        assert lookup(table, InfoState(0, sp.F + 1)) == pytest.approx(0.8899940, abs=2e-6)
        # the deep end of the fresh-one branch carries the largest index
        assert table.order[-1] == sp.state_index(InfoState(1, 4))

    def test_oscillating_reference_instance(self):
        bp = BanditParams(0.55, 0.5)
        table = build_table(bp, ENTROPY, epsilon=1e-6)
        assert lookup(table, InfoState(0, 1)) == pytest.approx(0.0017903, abs=2e-6)
        eq = lookup(table, InfoState(0, table.space.F + 1))
        assert eq == pytest.approx(0.0018112, abs=2e-6)
        assert lookup(table, InfoState(1, 1)) == pytest.approx(0.0018132, abs=2e-6)

    def test_oscillating_wide_swing_instance(self):
        bp = BanditParams(0.8, 0.6)
        sp = build_space(bp, 1e-5)
        table = build_table(bp, ENTROPY, space=sp)
        expect = {
            (0, 1): 0.07769945,
            (1, 2): 0.12827763,
            (0, 3): 0.13656732,
            (1, 4): 0.14262989,
            (1, 1): 0.14340892,
            (0, 2): 0.14699939,
        }
        for (last, age), w in expect.items():
            assert lookup(table, InfoState(last, age)) == pytest.approx(w, abs=1e-6)
        # the plateau edge state prices within truncation noise of the plateau
        assert lookup(table, InfoState(1, 3)) == pytest.approx(0.14607319, abs=5e-7)
        assert table.order[-1] == sp.state_index(InfoState(0, 2))


class TestTableStructure:
    @pytest.mark.parametrize("p,q", [
        (0.05, 0.2), (0.2, 0.4), (0.3, 0.6), (0.6, 0.3),
        (0.55, 0.5), (0.8, 0.6), (0.48, 0.58), (0.58, 0.48),
    ])
    @pytest.mark.parametrize("kind", ["entropy", "reciprocal"])
    def test_indices_nondecreasing(self, p, q, kind):
        table = build_table(BanditParams(p, q), make_penalty(kind))
        assert np.isfinite(table.indices).all()
        assert np.diff(table.indices).min() >= 0.0

    def test_order_is_permutation(self):
        table = build_table(BanditParams(0.2, 0.4), ENTROPY)
        assert sorted(table.order) == list(range(table.space.size))
        pos = int(table.order[5])
        assert table.index_of_state(pos) == table.indices[5]

    def test_equilibrium_position_field(self):
        table = build_table(BanditParams(0.55, 0.5), ENTROPY)
        assert table.order[table.equilibrium_position] == table.space.eq_index

    def test_oscillating_plateau_block(self):
        for p, q, eps in [(0.55, 0.5, 1e-6), (0.8, 0.6, 1e-5)]:
            table = build_table(BanditParams(p, q), ENTROPY, epsilon=eps)
            e = table.equilibrium_position
            block = table.indices[e:-1]
            assert block.size >= 1
            assert np.all(block == block[0])
            assert table.indices[-1] >= block[0]

    def test_symmetric_process_ties_pairwise(self):
        bp = BanditParams(0.3, 0.3)
        table = build_table(bp, ENTROPY, epsilon=1e-6)
        for k in range(1, table.space.F + 1):
            w0 = lookup(table, InfoState(0, k))
            w1 = lookup(table, InfoState(1, k))
            assert w0 == pytest.approx(w1, abs=1e-9)

    def test_swap_mirror_symmetry(self):
        # relabeling the source states mirrors beliefs; a symmetric penalty
        # then gives identical indices branch for branch
        t_pq = build_table(BanditParams(0.3, 0.6), ENTROPY, epsilon=1e-6)
        t_qp = build_table(BanditParams(0.6, 0.3), ENTROPY, epsilon=1e-6)
        assert t_pq.space.F == t_qp.space.F
        for k in range(1, t_pq.space.F + 1):
            assert lookup(t_pq, InfoState(0, k)) == pytest.approx(
                lookup(t_qp, InfoState(1, k)), abs=1e-8)
            assert lookup(t_pq, InfoState(1, k)) == pytest.approx(
                lookup(t_qp, InfoState(0, k)), abs=1e-8)

    def test_penalty_shift_leaves_indices_unchanged(self):
        bp = BanditParams(0.2, 0.4)
        t_a = build_table(bp, make_penalty("reciprocal", c=20.0), epsilon=1e-6)
        t_b = build_table(bp, make_penalty("reciprocal", c=3.0), epsilon=1e-6)
        for pos in range(t_a.space.size):
            assert t_a.index_of_state(pos) == pytest.approx(
                t_b.index_of_state(pos), abs=1e-8)

    def test_active_sets_are_belief_intervals(self):
        # states priced above any charge must form one contiguous belief belt
        table = build_table(BanditParams(0.05, 0.2), ENTROPY, epsilon=1e-6)
        by_state = np.array([table.index_of_state(i) for i in range(table.space.size)])
        for lam in (0.05, 0.2, 0.5, 0.9, 1.1):
            active = np.flatnonzero(by_state > lam)
            if active.size:
                assert active[-1] - active[0] + 1 == active.size

    @settings(max_examples=15, deadline=None)
    @given(small_params_strategy())
    def test_random_instances_ordered_and_nonnegative(self, bp):
        table = build_table(bp, ENTROPY)
        assert np.diff(table.indices).min() >= 0.0
        # nonnegative penalty implies nonnegative indices
        assert table.indices[0] >= -1e-9
        assert table.order[table.equilibrium_position] == table.space.eq_index


class TestLookup:
    def test_direct_and_saturated_entries(self):
        bp = BanditParams(0.05, 0.2)
        table = build_table(bp, ENTROPY, epsilon=1e-6)
        sp = table.space
        assert lookup(table, InfoState(0, 1)) == table.index_of_state(
            sp.state_index(InfoState(0, 1)))
        eq_val = table.index_of_state(sp.eq_index)
        assert lookup(table, InfoState(0, sp.F + 1)) == eq_val
        assert lookup(table, InfoState(1, sp.F + 7)) == eq_val
        assert lookup(table, InfoState(1, 1)) != eq_val
