"""Mean dynamics of the population as a differential inclusion.

Between thresholds every component moves exponentially toward a constant
(its proportion rho_k or zero), so the flow is integrated event to event in
closed form: within a region the total obeys

    total(t) = C + (total(0) - C) * exp(-t),   C = pi_i + pi'_j,

where i counts anticoordinator groups with threshold above the total and j
counts coordinator groups with threshold below. The time to reach a level L
on the way to C is log((C - total(0)) / (C - L)). When the total reaches a
threshold, exact rational sign tests on the one-sided region fields decide
whether the trajectory crosses or is pinned (Filippov sliding); while
pinned, the threshold's own subpopulation absorbs the other components'
motion (equivalent control) and converges to the associated equilibrium.

State vectors live in the box 0 <= x_k <= rho_k; states outside it are
errors, never clamped. Exact rational inputs are classified with exact
comparisons, float inputs with tolerance eq_tol.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

from .errors import AssumptionViolated, NoProgress, StateOutOfSpace
from .model import (
    CumulativeProfile,
    PopulationProfile,
    cumulative,
    validate_assumption1,
)

EQ_TOL_DEFAULT = 1e-12
T_END_DEFAULT = 50.0

Number = Union[Fraction, int, float]


@dataclass(frozen=True)
class AbstractInterval:
    """Set of admissible total-velocity values [lo, hi] at one total."""

    lo: Number
    hi: Number

    @property
    def is_singleton(self) -> bool:
        return self.lo == self.hi

    def contains(self, value: Number, tol: Number = 0) -> bool:
        return self.lo - tol <= value <= self.hi + tol


@dataclass(frozen=True)
class ComponentField:
    """Per-component velocity intervals of the differential inclusion."""

    intervals: tuple[tuple[Number, Number], ...]

    def is_singleton(self, k: int) -> bool:
        lo, hi = self.intervals[k]
        return lo == hi

    def contains(self, velocity: Sequence[Number], tol: Number = 0) -> bool:
        return all(
            lo - tol <= v <= hi + tol
            for (lo, hi), v in zip(self.intervals, velocity)
        )

    def zero_inside(self, tol: Number = 0) -> bool:
        return self.contains([0] * len(self.intervals), tol)


def _is_exact(values: Sequence[Number]) -> bool:
    return all(isinstance(v, (Fraction, int)) for v in values)


def _check_box(profile: PopulationProfile, x: Sequence[Number], slack: Number) -> None:
    if len(x) != profile.n_subpops:
        raise StateOutOfSpace(
            f"state has {len(x)} components, profile has {profile.n_subpops}"
        )
    for k, (v, rho) in enumerate(zip(x, profile.rho_flat)):
        if v < -slack or v > rho + slack:
            raise StateOutOfSpace(f"component {k} = {v} outside [0, {rho}]")


def vector_field(
    profile: PopulationProfile,
    x: Sequence[Number],
    eq_tol: float = EQ_TOL_DEFAULT,
) -> ComponentField:
    """Componentwise velocity set at state x.

    Anticoordinator k points toward rho_k below its threshold and toward 0
    above it; coordinators mirror that. Exactly at a component's own
    threshold the component's set is the full interval [-x_k, rho_k - x_k].
    Zero lies in every component interval iff x is an equilibrium.
    """
    exact = _is_exact(x)
    xs = [Fraction(v) for v in x] if exact else [float(v) for v in x]
    _check_box(profile, xs, 0 if exact else eq_tol)
    total = sum(xs)
    intervals = []
    for k, rho in enumerate(profile.rho_flat):
        theta: Number = profile.tau_flat[k] if exact else float(profile.tau_flat[k])
        rho_k: Number = rho if exact else float(rho)
        at = total == theta if exact else abs(total - theta) <= eq_tol
        if at:
            intervals.append((-xs[k], rho_k - xs[k]))
            continue
        toward_rho = total < theta if k < profile.p else total > theta
        if toward_rho:
            intervals.append((rho_k - xs[k], rho_k - xs[k]))
        else:
            intervals.append((-xs[k], -xs[k]))
    return ComponentField(tuple(intervals))


def _hull_counts(
    cum: CumulativeProfile, total: Number, exact: bool, eq_tol: float
) -> tuple[int, int, int, int]:
    """Counts (i_lo, j_lo, i_hi, j_hi) for the velocity hull at one total.

    The lower end of the hull excludes every group whose threshold the total
    is touching; the upper end includes them. On an open region the two
    coincide and the hull is a singleton.
    """
    prof = cum.profile
    if exact:
        i_lo = sum(1 for t in prof.anti_tau if t > total)
        i_hi = sum(1 for t in prof.anti_tau if t >= total)
        j_lo = sum(1 for t in prof.coord_tau if t < total)
        j_hi = sum(1 for t in prof.coord_tau if t <= total)
    else:
        i_lo = sum(1 for t in prof.anti_tau if float(t) > total + eq_tol)
        i_hi = sum(1 for t in prof.anti_tau if float(t) >= total - eq_tol)
        j_lo = sum(1 for t in prof.coord_tau if float(t) < total - eq_tol)
        j_hi = sum(1 for t in prof.coord_tau if float(t) <= total + eq_tol)
    return i_lo, j_lo, i_hi, j_hi


def abstract_field(
    profile: PopulationProfile,
    total: Number,
    eq_tol: float = EQ_TOL_DEFAULT,
    allow_degenerate: bool = False,
) -> AbstractInterval:
    """Velocity set of the total at one point of [0, 1].

    Requires the threshold-uniqueness check to pass unless allow_degenerate
    is given; with the override the interval is the convex hull over every
    touching threshold, which remains well defined.
    """
    report = validate_assumption1(profile)
    if not report.passed and not allow_degenerate:
        raise AssumptionViolated(report.summary())
    exact = isinstance(total, (Fraction, int))
    t: Number = Fraction(total) if exact else float(total)
    if t < (0 if exact else -eq_tol) or t > (1 if exact else 1 + eq_tol):
        raise StateOutOfSpace(f"total {total} outside [0, 1]")
    cum = cumulative(profile)
    i_lo, j_lo, i_hi, j_hi = _hull_counts(cum, t, exact, eq_tol)
    lo = cum.pi_at(i_lo) + cum.pi_prime_at(j_lo)
    hi = cum.pi_at(i_hi) + cum.pi_prime_at(j_hi)
    if exact:
        return AbstractInterval(lo - t, hi - t)
    return AbstractInterval(float(lo) - t, float(hi) - t)


@dataclass(frozen=True)
class FlowSegment:
    """One closed-form piece of a trajectory on [t0, t1].

    Every component relaxes exponentially toward its target:
    x_k(t) = target_k + (x0_k - target_k) * exp(-(t - t0)). During sliding
    the pinned component's target is the equivalent-control limit and the
    total stays at the threshold.
    """

    t0: float
    t1: float
    kind: str  # "smooth" or "sliding"
    x0: tuple[float, ...]
    targets: tuple[float, ...]
    pinned: Optional[int] = None  # flat index absorbed during sliding
    threshold: Optional[float] = None

    def state_at(self, t: float) -> tuple[float, ...]:
        decay = math.exp(-(t - self.t0))
        x = [c + (v - c) * decay for v, c in zip(self.x0, self.targets)]
        if self.pinned is not None:
            others = sum(v for k, v in enumerate(x) if k != self.pinned)
            x[self.pinned] = self.threshold - others
        return tuple(x)


@dataclass(frozen=True)
class FlowTrajectory:
    """Event-to-event solution of the mean dynamics up to t_end."""

    t_end: float
    segments: tuple[FlowSegment, ...]

    @property
    def breakpoints(self) -> list[tuple[float, tuple[float, ...], str]]:
        points = [(seg.t0, seg.x0, seg.kind) for seg in self.segments]
        points.append((self.t_end, self.final_state(), self.segments[-1].kind))
        return points

    def state_at(self, t: float) -> tuple[float, ...]:
        if not 0 <= t <= self.t_end:
            raise ValueError(f"time {t} outside [0, {self.t_end}]")
        starts = [seg.t0 for seg in self.segments]
        idx = max(0, bisect_right(starts, t) - 1)
        return self.segments[idx].state_at(t)

    def total_at(self, t: float) -> float:
        return sum(self.state_at(t))

    def final_state(self) -> tuple[float, ...]:
        return self.segments[-1].state_at(self.t_end)


def _region_targets(
    profile: PopulationProfile, i: int, j: int
) -> tuple[float, ...]:
    """Component limits in the region with i anti groups above and j coord below."""
    targets = []
    for k, rho in enumerate(profile.rho_flat):
        if k < profile.p:
            targets.append(float(rho) if k < i else 0.0)
        else:
            within = profile.n_subpops - k  # 1-based coordinator index
            targets.append(float(rho) if within <= j else 0.0)
    return tuple(targets)


def _slide_targets(
    cum: CumulativeProfile, role: str, m: int
) -> tuple[tuple[float, ...], int]:
    """Targets for sliding at threshold (role, m); pinned component absorbs."""
    prof = cum.profile
    theta = cum.tau_anti(m) if role == "anti" else cum.tau_coord(m)
    pinned = prof.flat_of(role, m)
    targets = []
    others = Fraction(0)
    for k, rho in enumerate(prof.rho_flat):
        if k == pinned:
            targets.append(0.0)  # placeholder, set below
            continue
        tau_k = prof.tau_flat[k]
        if k < prof.p:
            on = tau_k > theta
        else:
            on = tau_k < theta
        targets.append(float(rho) if on else 0.0)
        if on:
            others += rho
    targets[pinned] = float(theta - others)
    return tuple(targets), pinned


def _one_sided_fields(
    cum: CumulativeProfile, role: str, m: int
) -> tuple[Fraction, Fraction, tuple[int, int], tuple[int, int]]:
    """Exact region drifts just below and above threshold (role, m).

    Also returns the region labels (i, j) on each side.
    """
    theta = cum.tau_anti(m) if role == "anti" else cum.tau_coord(m)
    prof = cum.profile
    i_excl = sum(1 for t in prof.anti_tau if t > theta)
    i_incl = sum(1 for t in prof.anti_tau if t >= theta)
    j_excl = sum(1 for t in prof.coord_tau if t < theta)
    j_incl = sum(1 for t in prof.coord_tau if t <= theta)
    below = (i_incl, j_excl)
    above = (i_excl, j_incl)
    f_below = cum.pi_at(below[0]) + cum.pi_prime_at(below[1]) - theta
    f_above = cum.pi_at(above[0]) + cum.pi_prime_at(above[1]) - theta
    return f_below, f_above, below, above


def flow(
    profile: PopulationProfile,
    x0: Sequence[Number],
    t_end: float = T_END_DEFAULT,
    eq_tol: float = EQ_TOL_DEFAULT,
    perturb: float = 0.0,
) -> FlowTrajectory:
    """Integrate the mean dynamics from x0 for t_end time units.

    Event-driven: closed-form exponentials inside regions, exact rational
    sign tests at thresholds to choose between crossing and sliding, and
    equivalent-control sliding afterwards. A trajectory that starts exactly
    at an unstable separator stays there (stationary selection); pass a
    signed perturb (e.g. +-1e-9) to nudge the initial total off it.

    Duplicate thresholds make the event logic ill-posed (a continuum of
    equilibria appears) and raise AssumptionViolated. Cumulative-sum
    degeneracies need no special handling: the sign tests cover boundary
    equalities, under which a pinned segment converges to the merged point.
    """
    cum = cumulative(profile)
    taus = cum.sorted_thresholds()
    for (a, _, _), (b, rb, ib) in zip(taus, taus[1:]):
        if a == b:
            raise AssumptionViolated(
                f"duplicate threshold {b} ({rb} {ib}): continuum of equilibria"
            )

    exact = _is_exact(x0) and perturb == 0.0
    xs_exact = [Fraction(v) for v in x0] if exact else None
    _check_box(profile, xs_exact if exact else [float(v) for v in x0],
               0 if exact else eq_tol)
    x = [float(v) for v in x0]

    if perturb:
        budget = perturb
        for k, rho in enumerate(profile.rho_flat):
            room = float(rho) - x[k] if budget > 0 else x[k]
            delta = math.copysign(min(room, abs(budget)), budget)
            x[k] += delta
            budget -= delta
            if budget == 0:
                break

    def at_threshold(total_f: float) -> Optional[tuple[str, int]]:
        if exact:
            total_exact = sum(xs_exact)
            hits = cum.thresholds_at(total_exact)
            return hits[0] if hits else None
        for value, role, m in taus:
            if abs(total_f - float(value)) <= eq_tol:
                return role, m
        return None

    segments: list[FlowSegment] = []
    t = 0.0
    # mode: ("region", i, j) or ("slide", role, m); None until classified
    total = sum(x)
    hit = at_threshold(total)
    if hit is not None:
        role, m = hit
        f_below, f_above, below, above = _one_sided_fields(cum, role, m)
        if min(f_below, f_above) <= 0 <= max(f_below, f_above):
            mode: tuple = ("slide", role, m)
        elif f_below > 0:
            mode = ("region",) + above
        else:
            mode = ("region",) + below
    else:
        if exact:
            i, j = cum.counts_below(sum(xs_exact))
        else:
            i = sum(1 for tv in profile.anti_tau if float(tv) > total)
            j = sum(1 for tv in profile.coord_tau if float(tv) < total)
        mode = ("region", i, j)

    max_events = 8 * (len(taus) + 2)
    stall_count = 0
    for _ in range(max_events):
        if mode[0] == "slide":
            _, role, m = mode
            theta = cum.tau_anti(m) if role == "anti" else cum.tau_coord(m)
            targets, pinned = _slide_targets(cum, role, m)
            others = sum(v for k, v in enumerate(x) if k != pinned)
            x[pinned] = float(theta) - others
            segments.append(
                FlowSegment(t, t_end, "sliding", tuple(x), targets,
                            pinned=pinned, threshold=float(theta))
            )
            break

        _, i, j = mode
        C = cum.pi_at(i) + cum.pi_prime_at(j)
        targets = _region_targets(profile, i, j)
        C_f = float(C)
        if C_f > total:
            bounds = []
            if i >= 1:
                bounds.append((cum.tau_anti(i), "anti", i))
            if j + 1 <= profile.p_prime:
                bounds.append((cum.tau_coord(j + 1), "coord", j + 1))
            boundary = min(bounds) if bounds else None
            crossing_needed = boundary is not None and C > boundary[0]
        elif C_f < total:
            bounds = []
            if i + 1 <= profile.p:
                bounds.append((cum.tau_anti(i + 1), "anti", i + 1))
            if j >= 1:
                bounds.append((cum.tau_coord(j), "coord", j))
            boundary = max(bounds) if bounds else None
            crossing_needed = boundary is not None and C < boundary[0]
        else:
            crossing_needed = False

        if not crossing_needed:
            segments.append(FlowSegment(t, t_end, "smooth", tuple(x), targets))
            break

        theta, role, m = boundary
        theta_f = float(theta)
        ratio = (C_f - total) / (C_f - theta_f)
        dt = math.log(ratio) if ratio > 1 else 0.0
        if dt < 1e-14:
            stall_count += 1
            if stall_count >= 3:
                raise NoProgress(
                    f"event time {dt} at total {total}; integrator stalled"
                )
        else:
            stall_count = 0
        if t + dt >= t_end:
            segments.append(FlowSegment(t, t_end, "smooth", tuple(x), targets))
            break
        segments.append(FlowSegment(t, t + dt, "smooth", tuple(x), targets))
        decay = math.exp(-dt)
        x = [c + (v - c) * decay for v, c in zip(x, targets)]
        t += dt
        total = theta_f

        f_below, f_above, below, above = _one_sided_fields(cum, role, m)
        if min(f_below, f_above) <= 0 <= max(f_below, f_above):
            mode = ("slide", role, m)
        elif f_below > 0:
            mode = ("region",) + above
        else:
            mode = ("region",) + below
    else:
        raise NoProgress(f"more than {max_events} events before t_end; stalled")

    if not segments:
        raise NoProgress("no segment produced")  # unreachable
    return FlowTrajectory(t_end, tuple(segments))
