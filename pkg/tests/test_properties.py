"""Randomized invariant checks driven by hypothesis.

Each property mirrors a structural guarantee of the dynamics: kernels are
probability distributions, one-step noise respects the uniform bound, flows
stay in the state box, equilibria interleave stable and unstable points,
and the preference logic matches a from-scratch threshold oracle.
"""

from fractions import Fraction as F

from hypothesis import assume, given, settings, strategies as st

from brpop.continuous import abstract_field, flow, vector_field
from brpop.discrete import (
    DiscreteState,
    expected_drift,
    noise_bound,
    transition_distribution,
)
from brpop.equilibria import enumerate_equilibria
from brpop.experiments import format_rational
from brpop.model import (
    PopulationProfile,
    Preference,
    Strategy,
    TieRule,
    cumulative,
    parse_rational,
    preferred_strategy,
    valid_sizes,
    validate_assumption1,
)

DENOM = 40


@st.composite
def profiles(draw, max_anti=4, max_coord=4):
    """Profile with proportions and thresholds on a fixed rational grid.

    Proportions are a composition of DENOM into positive parts; thresholds
    are distinct interior grid points, split between the two roles and
    sorted into the required monotone orders.
    """
    p = draw(st.integers(min_value=0, max_value=max_anti))
    p_prime = draw(st.integers(min_value=0 if p else 1, max_value=max_coord))
    n_sub = p + p_prime
    cuts = sorted(
        draw(
            st.sets(
                st.integers(1, DENOM - 1),
                min_size=n_sub - 1,
                max_size=n_sub - 1,
            )
        )
    )
    parts = [b - a for a, b in zip([0] + cuts, cuts + [DENOM])]
    raw_taus = sorted(
        draw(st.sets(st.integers(1, DENOM - 1), min_size=n_sub, max_size=n_sub))
    )
    which_anti = draw(
        st.sets(st.integers(0, n_sub - 1), min_size=p, max_size=p)
    )
    anti_taus = sorted((raw_taus[i] for i in which_anti), reverse=True)
    coord_taus = sorted(
        raw_taus[i] for i in range(n_sub) if i not in which_anti
    )
    return PopulationProfile(
        anti_rho=tuple(F(parts[i], DENOM) for i in range(p)),
        anti_tau=tuple(F(t, DENOM) for t in anti_taus),
        coord_rho=tuple(F(parts[p + i], DENOM) for i in range(p_prime)),
        coord_tau=tuple(F(t, DENOM) for t in coord_taus),
    )


@st.composite
def profile_and_state(draw):
    prof = draw(profiles())
    n = DENOM
    caps = [int(r * n) for r in prof.rho_flat]
    counts = tuple(draw(st.integers(0, cap)) for cap in caps)
    return prof, DiscreteState(n=n, counts=counts)


TIES = st.sampled_from(list(TieRule))


class TestKernel:
    @settings(max_examples=200, deadline=None, derandomize=True)
    @given(profile_and_state(), TIES)
    def test_rows_sum_to_one(self, ps, tie):
        prof, state = ps
        dist = transition_distribution(prof, state, tie=tie)
        assert sum(q for _, q in dist.entries) == 1
        assert all(q > 0 for _, q in dist.entries)

    @settings(max_examples=200, deadline=None, derandomize=True)
    @given(profile_and_state(), TIES)
    def test_successors_move_one_agent(self, ps, tie):
        prof, state = ps
        dist = transition_distribution(prof, state, tie=tie)
        for succ, _ in dist.entries:
            diffs = [b - a for a, b in zip(state.counts, succ.counts)]
            moved = [d for d in diffs if d != 0]
            assert moved in ([], [1], [-1])


class TestNoise:
    @settings(max_examples=150, deadline=None, derandomize=True)
    @given(profile_and_state(), TIES)
    def test_realized_noise_within_bound(self, ps, tie):
        prof, state = ps
        drift = expected_drift(prof, state, tie=tie)
        budget = sum((1 + r) ** 2 for r in prof.rho_flat)
        dist = transition_distribution(prof, state, tie=tie)
        mean = [F(0)] * prof.n_subpops
        for succ, q in dist.entries:
            xi = [
                (succ.counts[k] - state.counts[k]) - drift[k]
                for k in range(prof.n_subpops)
            ]
            assert sum(v * v for v in xi) <= budget
            for k, v in enumerate(xi):
                mean[k] += q * v
        assert all(v == 0 for v in mean)
        assert noise_bound(prof) ** 2 <= float(budget) + 1e-9

    @settings(max_examples=100, deadline=None, derandomize=True)
    @given(profile_and_state(), TIES)
    def test_drift_bounded_by_proportions(self, ps, tie):
        prof, state = ps
        drift = expected_drift(prof, state, tie=tie)
        for k, v in enumerate(drift):
            assert abs(v) <= prof.rho_flat[k]


class TestFieldConsistency:
    @settings(max_examples=200, deadline=None, derandomize=True)
    @given(profile_and_state())
    def test_component_sum_matches_abstract_hull(self, ps):
        prof, state = ps
        x = [F(c, state.n) for c in state.counts]
        comp = vector_field(prof, x)
        hull = abstract_field(prof, sum(x), allow_degenerate=True)
        assert sum(lo for lo, _ in comp.intervals) == hull.lo
        assert sum(hi for _, hi in comp.intervals) == hull.hi

    @settings(max_examples=100, deadline=None, derandomize=True)
    @given(profiles(), st.integers(0, DENOM))
    def test_abstract_hull_is_ordered(self, prof, num):
        hull = abstract_field(prof, F(num, DENOM), allow_degenerate=True)
        assert hull.lo <= hull.hi


class TestFlowBox:
    @settings(max_examples=40, deadline=None, derandomize=True)
    @given(profile_and_state())
    def test_states_stay_in_box(self, ps):
        prof, state = ps
        x0 = [F(c, state.n) for c in state.counts]
        traj = flow(prof, x0, t_end=20.0)
        tol = 1e-9
        for _, xs, _ in traj.breakpoints:
            for k, v in enumerate(xs):
                assert -tol <= v <= float(prof.rho_flat[k]) + tol
            assert -tol <= sum(xs) <= 1 + tol


class TestEquilibriumStructure:
    @settings(max_examples=200, deadline=None, derandomize=True)
    @given(profiles())
    def test_interleaving(self, prof):
        assume(validate_assumption1(prof).passed)
        eqs = enumerate_equilibria(prof)
        points = eqs.points
        assert len(points) % 2 == 1
        values = [pt.abstract_value for pt in points]
        assert values == sorted(set(values))
        flags = [pt.stable_kind for pt in points]
        assert flags[0] and flags[-1]
        assert all(a != b for a, b in zip(flags, flags[1:]))

    @settings(max_examples=150, deadline=None, derandomize=True)
    @given(profiles())
    def test_equilibrium_states_realize_values(self, prof):
        assume(validate_assumption1(prof).passed)
        for pt in enumerate_equilibria(prof).points:
            assert sum(pt.state) == pt.abstract_value
            for k, v in enumerate(pt.state):
                assert 0 <= v <= prof.rho_flat[k]


def oracle_preference(is_anti, tau, total, current, n, tie):
    """Threshold comparison written out longhand, independent of the model."""
    if tie is TieRule.SELF_INCLUSIVE_PREFER_A:
        if is_anti:
            return Preference.A if total <= tau else Preference.B
        return Preference.A if total >= tau else Preference.B
    cut = tau + (F(1, n) if current is Strategy.A else 0)
    if total != cut:
        below = total < cut
        if is_anti:
            return Preference.A if below else Preference.B
        return Preference.B if below else Preference.A
    if tie is TieRule.PREFER_A:
        return Preference.A
    if tie is TieRule.PREFER_B:
        return Preference.B
    return Preference.COIN


class TestPreferenceLogic:
    @settings(max_examples=300, deadline=None, derandomize=True)
    @given(
        profiles(),
        st.integers(0, DENOM),
        st.sampled_from(list(Strategy)),
        TIES,
        st.data(),
    )
    def test_matches_threshold_oracle(self, prof, num, current, tie, data):
        k = data.draw(st.integers(0, prof.n_subpops - 1))
        total = F(num, DENOM)
        cum = cumulative(prof)
        got = preferred_strategy(prof, cum, k, total, current, DENOM, tie=tie)
        want = oracle_preference(
            prof.is_anti_flat(k), prof.tau_flat[k], total, current, DENOM, tie
        )
        assert got == want

    @settings(max_examples=200, deadline=None, derandomize=True)
    @given(
        profiles(),
        st.integers(0, DENOM),
        st.sampled_from(list(Strategy)),
        st.data(),
    )
    def test_tie_rules_agree_off_ties(self, prof, num, current, data):
        k = data.draw(st.integers(0, prof.n_subpops - 1))
        total = F(num, DENOM)
        cum = cumulative(prof)
        answers = {
            tie: preferred_strategy(prof, cum, k, total, current, DENOM, tie=tie)
            for tie in (TieRule.PREFER_A, TieRule.PREFER_B, TieRule.UNIFORM_RANDOM)
        }
        if len(set(answers.values())) > 1:
            cut = prof.tau_flat[k] + (
                F(1, DENOM) if current is Strategy.A else 0
            )
            assert total == cut
            assert answers[TieRule.UNIFORM_RANDOM] is Preference.COIN

    @settings(max_examples=200, deadline=None, derandomize=True)
    @given(profiles(), st.integers(0, DENOM), st.data())
    def test_self_inclusive_ignores_current(self, prof, num, data):
        k = data.draw(st.integers(0, prof.n_subpops - 1))
        total = F(num, DENOM)
        cum = cumulative(prof)
        tie = TieRule.SELF_INCLUSIVE_PREFER_A
        a_view = preferred_strategy(prof, cum, k, total, Strategy.A, DENOM, tie=tie)
        b_view = preferred_strategy(prof, cum, k, total, Strategy.B, DENOM, tie=tie)
        assert a_view == b_view


class TestSizesAndParsing:
    @settings(max_examples=100, deadline=None, derandomize=True)
    @given(profiles(), st.integers(1, 200))
    def test_valid_sizes_oracle(self, prof, n_max):
        expected = [
            n
            for n in range(1, n_max + 1)
            if all((r * n).denominator == 1 for r in prof.rho_flat)
        ]
        assert valid_sizes(prof, n_max) == expected

    @settings(max_examples=300, deadline=None, derandomize=True)
    @given(st.fractions(min_value=-100, max_value=100, max_denominator=10**6))
    def test_format_parse_round_trip(self, q):
        assert parse_rational(format_rational(q)) == q
