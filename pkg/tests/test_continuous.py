import math
from fractions import Fraction

import pytest

from brpop.continuous import (
    AbstractInterval,
    abstract_field,
    flow,
    vector_field,
)
from brpop.errors import AssumptionViolated, StateOutOfSpace
from brpop.model import PopulationProfile

F = Fraction


def proportional(profile, total):
    return [total * rho for rho in profile.rho_flat]


class TestVectorField:
    def test_singleton_region(self, profile_1a2c):
        # total 0.5: anticoordinator recruits, middle group decays, and the
        # low-threshold coordinator group is already full
        fld = vector_field(profile_1a2c, (F(3, 10), F(1, 10), F(1, 10)))
        assert fld.intervals == (
            (F(3, 10), F(3, 10)),
            (F(-1, 10), F(-1, 10)),
            (F(0), F(0)),
        )
        assert all(fld.is_singleton(k) for k in range(3))

    def test_interval_at_own_threshold(self, profile_1a2c):
        # the anticoordinator-driven equilibrium state, total exactly 17/20
        fld = vector_field(profile_1a2c, (F(9, 20), F(3, 10), F(1, 10)))
        assert fld.intervals[0] == (F(-9, 20), F(3, 20))
        assert fld.intervals[1] == (F(0), F(0))
        assert fld.intervals[2] == (F(0), F(0))
        assert fld.zero_inside()

    def test_float_input_uses_tolerance(self, profile_1a2c):
        fld = vector_field(profile_1a2c, (0.45, 0.3, 0.1))
        assert fld.zero_inside(tol=1e-9)

    def test_outside_box_raises(self, profile_1a2c):
        with pytest.raises(StateOutOfSpace):
            vector_field(profile_1a2c, (F(7, 10), F(0), F(0)))


class TestAbstractField:
    @pytest.mark.parametrize(
        "total,lo,hi",
        [
            (F(1, 5), F(3, 5) - F(1, 5), F(3, 5) - F(1, 5)),
            (F(7, 20), F(3, 5) - F(7, 20), F(7, 10) - F(7, 20)),
            (F(1, 2), F(7, 10) - F(1, 2), F(7, 10) - F(1, 2)),
            (F(3, 4), F(7, 10) - F(3, 4), F(1) - F(3, 4)),
            (F(4, 5), F(1) - F(4, 5), F(1) - F(4, 5)),
            (F(17, 20), F(2, 5) - F(17, 20), F(1) - F(17, 20)),
            (F(9, 10), F(2, 5) - F(9, 10), F(2, 5) - F(9, 10)),
        ],
    )
    def test_piecewise_structure(self, profile_1a2c, total, lo, hi):
        interval = abstract_field(profile_1a2c, total)
        assert interval == AbstractInterval(lo, hi)

    def test_equilibrium_points_contain_zero(self, profile_1a2c):
        for total in (F(7, 10), F(3, 4), F(17, 20)):
            assert abstract_field(profile_1a2c, total).contains(0)

    def test_gates_on_failed_uniqueness(self, profile_3a4c):
        with pytest.raises(AssumptionViolated):
            abstract_field(profile_3a4c, F(1, 2))

    def test_override_takes_hull(self, profile_3a4c):
        interval = abstract_field(profile_3a4c, F(1, 2), allow_degenerate=True)
        assert interval.lo < 0 < interval.hi

    def test_out_of_range_total(self, profile_1a2c):
        with pytest.raises(StateOutOfSpace):
            abstract_field(profile_1a2c, F(6, 5))


class TestFlow:
    def test_converges_to_clean_cut(self, profile_1a2c):
        traj = flow(profile_1a2c, proportional(profile_1a2c, F(1, 2)))
        final = traj.final_state()
        target = (0.6, 0.0, 0.1)
        assert max(abs(a - b) for a, b in zip(final, target)) < 1e-9

    def test_slides_onto_anti_threshold(self, profile_1a2c):
        traj = flow(profile_1a2c, proportional(profile_1a2c, F(19, 20)))
        final = traj.final_state()
        target = (0.45, 0.3, 0.1)
        assert max(abs(a - b) for a, b in zip(final, target)) < 1e-9
        assert traj.segments[-1].kind == "sliding"

    def test_total_monotone_within_segments(self, profile_1a5c):
        traj = flow(profile_1a5c, proportional(profile_1a5c, F(19, 20)))
        times = [seg.t0 for seg in traj.segments] + [traj.t_end]
        for seg, t1 in zip(traj.segments, times[1:]):
            grid = [seg.t0 + (t1 - seg.t0) * u / 8 for u in range(9)]
            totals = [sum(traj.state_at(t)) for t in grid]
            diffs = [b - a for a, b in zip(totals, totals[1:])]
            assert all(d >= -1e-12 for d in diffs) or all(
                d <= 1e-12 for d in diffs
            )

    def test_event_time_is_exact_log(self, profile_single_anti):
        # from x=0 the single group relaxes toward 1 and meets tau=3/5
        # where it pins: the crossing happens at ln(1/(1-3/5)) = ln(5/2)
        traj = flow(profile_single_anti, [F(0)])
        assert traj.segments[0].kind == "smooth"
        t_hit = traj.segments[1].t0
        assert t_hit == pytest.approx(math.log(2.5), rel=1e-12)
        assert traj.segments[1].kind == "sliding"
        assert traj.final_state()[0] == pytest.approx(0.6, abs=1e-12)

    def test_stationary_at_equilibrium(self, profile_1a2c):
        traj = flow(profile_1a2c, (F(3, 5), F(0), F(1, 10)), t_end=10.0)
        for t in (0.0, 1.0, 5.0, 10.0):
            state = traj.state_at(t)
            assert state[0] == pytest.approx(0.6, abs=1e-12)
            assert state[1] == pytest.approx(0.0, abs=1e-12)

    def test_pinned_component_balances_total(self, profile_1a2c):
        traj = flow(profile_1a2c, proportional(profile_1a2c, F(9, 10)))
        sliding = [s for s in traj.segments if s.kind == "sliding"]
        assert sliding
        for seg in sliding:
            for u in range(5):
                t = seg.t0 + u * 0.05
                assert sum(traj.state_at(t)) == pytest.approx(
                    0.85, abs=1e-10
                )

    def test_exponential_tail_slope(self, profile_1a2c):
        # clean-cut convergence is exponential with unit rate
        traj = flow(profile_1a2c, proportional(profile_1a2c, F(1, 2)))
        target = 0.7
        samples = []
        for t in (2.0, 3.0, 4.0, 5.0, 6.0):
            gap = abs(sum(traj.state_at(t)) - target)
            if gap > 0:
                samples.append((t, math.log(gap)))
        slopes = [
            (lb - la) / (tb - ta)
            for (ta, la), (tb, lb) in zip(samples, samples[1:])
        ]
        assert all(s <= -0.9 for s in slopes)

    def test_duplicate_thresholds_refused(self):
        prof = PopulationProfile(
            anti_rho=(F(1, 2),),
            anti_tau=(F(1, 2),),
            coord_rho=(F(1, 2),),
            coord_tau=(F(1, 2),),
        )
        with pytest.raises(AssumptionViolated):
            flow(prof, [F(1, 8), F(1, 8)])

    def test_latent_degeneracy_is_fine(self, profile_3a4c):
        traj = flow(profile_3a4c, proportional(profile_3a4c, F(7, 10)))
        assert sum(traj.final_state()) == pytest.approx(6 / 7, abs=1e-9)

    def test_states_stay_in_box(self, profile_1a5c):
        traj = flow(profile_1a5c, proportional(profile_1a5c, F(1, 50)))
        rho = [float(r) for r in profile_1a5c.rho_flat]
        for t, state, _ in traj.breakpoints:
            for v, cap in zip(state, rho):
                assert -1e-9 <= v <= cap + 1e-9

    def test_rejects_start_outside_box(self, profile_1a2c):
        with pytest.raises(StateOutOfSpace):
            flow(profile_1a2c, [F(1), F(0), F(0)])
