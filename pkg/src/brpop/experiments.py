"""Reproducible experiments linking the chain, the flow, and the equilibria.

Every stochastic cell derives its own 64-bit seed from (master_seed, N,
replicate) through blake2b, so cells are independent of execution order and
can be rerun in isolation. Simulation initial states default to
uniform-random points of the discrete state space drawn from a dedicated
child stream of the cell seed.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .continuous import EQ_TOL_DEFAULT, flow
from .discrete import (
    STATE_CAP_DEFAULT,
    DiscreteState,
    capacities,
    closed_classes,
    expected_drift,
    simulate,
)
from .equilibria import birkhoff_center
from .errors import StateSpaceTooLarge
from .model import PopulationProfile, TieRule, cumulative


def format_rational(value, decimal: bool = False) -> str:
    """Exact num/den string, or a 12-significant-digit decimal on request."""
    if decimal:
        return f"{float(value):.12g}"
    if isinstance(value, float):
        value = Fraction(value).limit_denominator(10**15)
    return str(Fraction(value))


def derive_run_seed(master_seed: int, n: int, replicate: int) -> int:
    """Stable 64-bit per-cell seed; independent of platform and run order."""
    key = f"{master_seed}:{n}:{replicate}".encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


def uniform_state(
    profile: PopulationProfile, n: int, run_seed: int
) -> DiscreteState:
    """Uniform-random state of the size-n state space, from the cell's stream."""
    init_ss = np.random.SeedSequence(run_seed, spawn_key=(2,))
    rng = np.random.Generator(np.random.PCG64(init_ss))
    caps = capacities(profile, n)
    counts = tuple(int(rng.integers(0, cap + 1)) for cap in caps)
    return DiscreteState(n, counts)


@dataclass(frozen=True)
class SweepRow:
    """Fluctuation amplitude of one replicate at one population size."""

    n: int
    replicate: int
    seed: int
    min_total: Fraction
    max_total: Fraction
    amplitude: Fraction


def fluctuation_sweep(
    profile: PopulationProfile,
    sizes: Sequence[int],
    replicates: int,
    steps_per_agent: int = 30,
    burn_in_fraction: float = 0.5,
    master_seed: int = 0,
    tie: TieRule = TieRule.PREFER_A,
) -> list[SweepRow]:
    """Simulate every (size, replicate) cell and record total-range stats.

    Each cell runs steps_per_agent * N steps from a uniform-random initial
    state, discarding the first burn_in_fraction of the trajectory before
    taking the min/max of the total. Rows come back sorted by (N, replicate).
    """
    rows = []
    for n in sorted(sizes):
        capacities(profile, n)  # raises InvalidSize early
        steps = steps_per_agent * n
        burn_in = int(round(burn_in_fraction * steps))
        for replicate in range(replicates):
            run_seed = derive_run_seed(master_seed, n, replicate)
            state0 = uniform_state(profile, n, run_seed)
            stats = simulate(profile, state0, steps, burn_in, run_seed, tie)
            rows.append(
                SweepRow(
                    n=n,
                    replicate=replicate,
                    seed=run_seed,
                    min_total=stats.visited_min_total,
                    max_total=stats.visited_max_total,
                    amplitude=stats.amplitude,
                )
            )
    return rows


def median_amplitude_by_size(rows: Sequence[SweepRow]) -> dict[int, Fraction]:
    """Per-size median of the replicate amplitudes (midpoint for even counts)."""
    by_size: dict[int, list[Fraction]] = {}
    for row in rows:
        by_size.setdefault(row.n, []).append(row.amplitude)
    medians = {}
    for n, amps in by_size.items():
        amps.sort()
        mid = len(amps) // 2
        if len(amps) % 2:
            medians[n] = amps[mid]
        else:
            medians[n] = (amps[mid - 1] + amps[mid]) / 2
    return medians


@dataclass(frozen=True)
class ConcentrationRow:
    """How far one closed class sits from the Birkhoff center."""

    n: int
    class_id: int
    abs_lo: Fraction
    abs_hi: Fraction
    hausdorff: Fraction
    mass_within_eps: Fraction


def _directed_hausdorff_to_set(
    lo: Fraction, hi: Fraction, values: Sequence[Fraction]
) -> Fraction:
    """sup over x in [lo, hi] of the distance from x to a finite value set.

    The supremum is attained at an interval endpoint or at a midpoint of
    adjacent set values lying inside the interval, so the computation stays
    exact.
    """
    candidates = [lo, hi]
    ordered = sorted(values)
    for a, b in zip(ordered, ordered[1:]):
        mid = (a + b) / 2
        if lo < mid < hi:
            candidates.append(mid)
    return max(min(abs(x - q) for q in ordered) for x in candidates)


def concentration_check(
    profile: PopulationProfile,
    sizes: Sequence[int],
    eps,
    tie: TieRule = TieRule.PREFER_A,
    allow_degenerate: bool = False,
    state_cap: int = STATE_CAP_DEFAULT,
) -> list[ConcentrationRow]:
    """Compare every closed class against the Birkhoff center.

    For each class: the directed Hausdorff distance from its abstract range
    to the center's abstract values, and the stationary mass it puts on
    states within sup-norm eps of some center state. Both are exact.
    """
    eps = Fraction(eps)
    center = birkhoff_center(profile, allow_degenerate)
    values = [pt.abstract_value for pt in center]
    states = [pt.state for pt in center]

    def near_center(s: DiscreteState) -> bool:
        xs = s.as_fractions()
        return any(
            max(abs(a - b) for a, b in zip(xs, q)) <= eps for q in states
        )

    rows = []
    for n in sorted(sizes):
        for class_id, cls in enumerate(closed_classes(profile, n, tie, state_cap)):
            lo, hi = cls.abstract_range
            rows.append(
                ConcentrationRow(
                    n=n,
                    class_id=class_id,
                    abs_lo=lo,
                    abs_hi=hi,
                    hausdorff=_directed_hausdorff_to_set(lo, hi, values),
                    mass_within_eps=cls.measure_of(near_center),
                )
            )
    return rows


@dataclass(frozen=True)
class DriftViolation:
    state: DiscreteState
    component: int
    drift: Fraction
    lo: Fraction
    hi: Fraction


@dataclass(frozen=True)
class DriftReport:
    """Exhaustive drift-vs-field comparison over a full state space."""

    n: int
    tie: TieRule
    singleton_states: int
    band_states: int
    violations: tuple[DriftViolation, ...]

    @property
    def total_states(self) -> int:
        return self.singleton_states + self.band_states


def drift_consistency_check(
    profile: PopulationProfile,
    n: int,
    tie: TieRule = TieRule.PREFER_A,
    state_cap: int = STATE_CAP_DEFAULT,
) -> DriftReport:
    """Check N * E[dX] against the mean-field branches on every state.

    Away from every threshold band [tau, tau + 1/N] the drift must equal the
    singleton field value exactly; when the total lies inside a component's
    own band the drift must lie in the hull [-x_k, rho_k - x_k]. A state
    counts as a band state when any component is in its band.
    """
    caps = capacities(profile, n)
    size = 1
    for cap in caps:
        size *= cap + 1
        if size > state_cap:
            raise StateSpaceTooLarge(f"state space exceeds cap {state_cap}")
    cum = cumulative(profile)
    violations = []
    singleton_states = 0
    band_states = 0

    def states():
        def rec(k, prefix):
            if k == len(caps):
                yield tuple(prefix)
                return
            for c in range(caps[k] + 1):
                yield from rec(k + 1, prefix + [c])

        yield from rec(0, [])

    h = Fraction(1, n)
    for counts in states():
        state = DiscreteState(n, counts)
        total = state.total_x
        drift = expected_drift(profile, state, tie)
        any_band = False
        for k, rho in enumerate(profile.rho_flat):
            theta = profile.tau_flat[k]
            x_k = state.x(k)
            d = drift[k]
            if theta <= total <= theta + h:
                any_band = True
                lo, hi = -x_k, rho - x_k
                if not lo <= d <= hi:
                    violations.append(DriftViolation(state, k, d, lo, hi))
                continue
            if k < profile.p:
                expected = rho - x_k if total < theta else -x_k
            else:
                expected = -x_k if total < theta else rho - x_k
            if d != expected:
                violations.append(DriftViolation(state, k, d, expected, expected))
        if any_band:
            band_states += 1
        else:
            singleton_states += 1
    return DriftReport(n, tie, singleton_states, band_states, tuple(violations))


@dataclass(frozen=True)
class OverlayRow:
    t: float
    discrete_total: Fraction
    continuous_total: float


@dataclass(frozen=True)
class OverlayResult:
    """Aligned discrete trajectory and mean flow, one row per step."""

    n: int
    seed: int
    rows: tuple[OverlayRow, ...]
    sup_gap: float


def compare_discrete_continuous(
    profile: PopulationProfile,
    n: int,
    x0_counts: Optional[Sequence[int]] = None,
    steps: Optional[int] = None,
    seed: int = 0,
    tie: TieRule = TieRule.PREFER_A,
    eq_tol: float = EQ_TOL_DEFAULT,
) -> OverlayResult:
    """Overlay one chain run on the flow started at the same point.

    Chain step k is matched to flow time k/N. x0 defaults to the all-B
    state; steps defaults to 30 per agent.
    """
    caps = capacities(profile, n)
    if x0_counts is None:
        x0_counts = tuple(0 for _ in caps)
    if steps is None:
        steps = 30 * n
    state0 = DiscreteState(n, tuple(int(c) for c in x0_counts))
    totals: list[int] = []
    simulate(
        profile,
        state0,
        steps,
        burn_in=0,
        seed=seed,
        tie=tie,
        on_state=lambda idx, total, counts: totals.append(total),
    )
    trajectory = flow(profile, state0.as_fractions(), t_end=steps / n, eq_tol=eq_tol)
    rows = []
    sup_gap = 0.0
    for k, total in enumerate(totals):
        t = k / n
        cont = trajectory.total_at(min(t, trajectory.t_end))
        gap = abs(total / n - cont)
        sup_gap = max(sup_gap, gap)
        rows.append(OverlayRow(t=t, discrete_total=Fraction(total, n),
                               continuous_total=cont))
    return OverlayResult(n=n, seed=seed, rows=tuple(rows), sup_gap=sup_gap)


SWEEP_HEADER = ["N", "replicate", "seed", "min_total", "max_total", "amplitude"]
CONCENTRATION_HEADER = ["N", "class_id", "abs_lo", "abs_hi", "hausdorff",
                        "mass_within_eps"]
OVERLAY_HEADER = ["t", "discrete_total", "continuous_total"]


def write_sweep_csv(rows: Sequence[SweepRow], path, decimal: bool = False) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_HEADER)
        for r in rows:
            writer.writerow([
                r.n, r.replicate, r.seed,
                format_rational(r.min_total, decimal),
                format_rational(r.max_total, decimal),
                format_rational(r.amplitude, decimal),
            ])


def write_concentration_csv(
    rows: Sequence[ConcentrationRow], path, decimal: bool = False
) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CONCENTRATION_HEADER)
        for r in rows:
            writer.writerow([
                r.n, r.class_id,
                format_rational(r.abs_lo, decimal),
                format_rational(r.abs_hi, decimal),
                format_rational(r.hausdorff, decimal),
                format_rational(r.mass_within_eps, decimal),
            ])


def write_overlay_csv(result: OverlayResult, path, decimal: bool = False) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(OVERLAY_HEADER)
        for r in result.rows:
            writer.writerow([
                f"{r.t:.12g}",
                format_rational(r.discrete_total, decimal),
                f"{r.continuous_total:.12g}",
            ])
