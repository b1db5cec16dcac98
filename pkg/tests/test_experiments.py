from fractions import Fraction

import pytest

from brpop.discrete import DiscreteState
from brpop.experiments import (
    SweepRow,
    compare_discrete_continuous,
    concentration_check,
    derive_run_seed,
    drift_consistency_check,
    fluctuation_sweep,
    format_rational,
    median_amplitude_by_size,
    uniform_state,
    write_concentration_csv,
    write_sweep_csv,
)
from brpop.model import TieRule

F = Fraction


class TestFormatting:
    def test_exact_by_default(self):
        assert format_rational(F(7, 120)) == "7/120"
        assert format_rational(F(3)) == "3"

    def test_decimal_mode(self):
        assert format_rational(F(1, 3), decimal=True) == "0.333333333333"
        assert format_rational(0.5, decimal=True) == "0.5"


class TestSeeding:
    def test_run_seed_is_stable(self):
        assert derive_run_seed(12345, 30, 0) == 12433984372708139539
        assert derive_run_seed(12345, 30, 1) == 17567982114574439457
        assert derive_run_seed(12345, 120, 0) == 15038031696817524407

    def test_distinct_across_cells(self):
        seeds = {
            derive_run_seed(1, n, r) for n in (30, 60) for r in range(50)
        }
        assert len(seeds) == 100

    def test_uniform_state_deterministic(self, profile_1a2c):
        a = uniform_state(profile_1a2c, 20, 99)
        b = uniform_state(profile_1a2c, 20, 99)
        assert a == b
        assert all(
            c <= cap for c, cap in zip(a.counts, (12, 6, 2))
        )


class TestSweep:
    def test_rows_are_deterministic(self, profile_1a5c):
        kwargs = dict(sizes=[30], replicates=3, master_seed=7)
        assert fluctuation_sweep(profile_1a5c, **kwargs) == fluctuation_sweep(
            profile_1a5c, **kwargs
        )

    def test_row_shape(self, profile_1a5c):
        rows = fluctuation_sweep(profile_1a5c, [30, 60], 2, master_seed=1)
        assert [(r.n, r.replicate) for r in rows] == [
            (30, 0), (30, 1), (60, 0), (60, 1),
        ]
        for r in rows:
            assert 0 <= r.min_total <= r.max_total <= 1
            assert r.amplitude == r.max_total - r.min_total
            assert r.seed == derive_run_seed(1, r.n, r.replicate)

    def test_median_amplitudes_shrink(self, profile_1a5c):
        rows = fluctuation_sweep(profile_1a5c, [30, 120], 10, master_seed=12345)
        medians = median_amplitude_by_size(rows)
        assert medians == {30: F(2, 15), 120: F(7, 120)}

    def test_median_midpoint_for_even_count(self):
        rows = [
            SweepRow(10, i, 0, F(0), amp, amp)
            for i, amp in enumerate([F(1, 10), F(2, 10), F(3, 10), F(6, 10)])
        ]
        assert median_amplitude_by_size(rows) == {10: F(1, 4)}


class TestConcentration:
    def test_classes_approach_the_center(self, profile_1a2c):
        rows = concentration_check(profile_1a2c, [20, 40, 80], F(1, 20))
        table = [
            (r.n, r.class_id, r.abs_lo, r.hausdorff, r.mass_within_eps)
            for r in rows
        ]
        assert table == [
            (20, 0, F(7, 10), F(0), F(1)),
            (20, 1, F(9, 10), F(1, 20), F(1)),
            (40, 0, F(7, 10), F(0), F(1)),
            (40, 1, F(7, 8), F(1, 40), F(1)),
            (80, 0, F(7, 10), F(0), F(1)),
            (80, 1, F(69, 80), F(1, 80), F(1)),
        ]

    def test_mass_monotone_in_eps(self, profile_1a2c):
        loose = concentration_check(profile_1a2c, [20], F(1, 10))
        tight = concentration_check(profile_1a2c, [20], F(1, 100))
        for lo, hi in zip(tight, loose):
            assert lo.mass_within_eps <= hi.mass_within_eps


class TestDriftCheck:
    def test_no_violations_any_tie_rule(self, profile_1a2c):
        for tie in TieRule:
            report = drift_consistency_check(profile_1a2c, 20, tie)
            assert report.violations == ()
            assert report.singleton_states + report.band_states == 273

    def test_band_states_are_counted(self, profile_1a2c):
        report = drift_consistency_check(profile_1a2c, 20)
        assert report.band_states == 83


class TestOverlay:
    def test_gap_shrinks_with_size(self, profile_1a5c):
        small = compare_discrete_continuous(profile_1a5c, 30, seed=777)
        big = compare_discrete_continuous(profile_1a5c, 480, seed=777)
        assert small.sup_gap == pytest.approx(0.0986341, abs=1e-6)
        assert big.sup_gap < small.sup_gap

    def test_rows_align_on_agent_clock(self, profile_1a5c):
        result = compare_discrete_continuous(profile_1a5c, 30, steps=60)
        assert len(result.rows) == 61
        assert result.rows[0].t == 0.0
        assert result.rows[-1].t == pytest.approx(2.0)
        # both tracks start from the all-B state
        assert result.rows[0].discrete_total == 0
        assert result.rows[0].continuous_total == 0

    def test_explicit_start(self, profile_1a2c):
        result = compare_discrete_continuous(
            profile_1a2c, 20, x0_counts=(12, 0, 2), steps=40
        )
        assert result.sup_gap == 0


class TestCsvWriters:
    def test_sweep_csv_round_trip(self, profile_1a5c, tmp_path):
        rows = fluctuation_sweep(profile_1a5c, [30], 2, master_seed=5)
        path = tmp_path / "sweep.csv"
        write_sweep_csv(rows, path)
        write_sweep_csv(rows, tmp_path / "again.csv")
        assert path.read_bytes() == (tmp_path / "again.csv").read_bytes()
        header, first, _ = path.read_text().splitlines()
        assert header == "N,replicate,seed,min_total,max_total,amplitude"
        assert first.startswith("30,0,")

    def test_concentration_csv(self, profile_1a2c, tmp_path):
        rows = concentration_check(profile_1a2c, [20], F(1, 20))
        path = tmp_path / "conc.csv"
        write_concentration_csv(rows, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "N,class_id,abs_lo,abs_hi,hausdorff,mass_within_eps"
        assert lines[1] == "20,0,7/10,7/10,0,1"
