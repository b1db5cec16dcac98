"""Equilibrium enumeration, stability, basins, and the Birkhoff center.

Equilibria of the mean dynamics come in three kinds, indexed by the number i
of anticoordinator groups playing A and the number j of coordinator groups
playing A:

  clean-cut      every group saturated; total = pi_i + pi'_j strictly inside
                 the thresholds that keep each group's choice consistent
  anti-driven    anticoordinator i split exactly at its own threshold tau_i,
                 groups 1..i-1 and the j = benchmark coordinators saturated
  coord-driven   coordinator j split at tau'_j, the i = benchmark
                 anticoordinators and coordinators 1..j-1 saturated

Clean-cut and anticoordinator-driven points are asymptotically stable;
coordinator-driven points are unstable separators, and exactly one of them
sits strictly between consecutive stable points. Basins of attraction in the
abstract (total) coordinate are the open intervals between neighboring
separators, closed at 0 for the first stable point and at 1 for the last.

Sentinel comparisons in the clean-cut condition are non-binding, so the
all-B point (total 0) and the all-A point (total 1) qualify whenever only a
sentinel would block strictness.

Profiles that fail the threshold-uniqueness check are refused unless
allow_degenerate is passed; with the override, benchmark-consistent sum
coincidences are emitted as merged points (stable when an anticoordinator
threshold is hit, unstable for a coordinator threshold) and duplicate
thresholds yield ContinuumDetected markers without further analysis.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from typing import Optional

from .continuous import vector_field
from .errors import AssumptionViolated, IndexOutOfRange, MalformedSet
from .model import (
    CumulativeProfile,
    PopulationProfile,
    cumulative,
    validate_assumption1,
)


class EquilibriumKind(Enum):
    CLEAN_CUT = "clean-cut"
    ANTICOORD_DRIVEN = "anticoordinator-driven"
    COORD_DRIVEN = "coordinator-driven"


class Stability(Enum):
    STABLE = "asymptotically-stable"
    UNSTABLE = "unstable"


@dataclass(frozen=True)
class BasinInterval:
    """Abstract-coordinate basin (lo, hi), with explicit endpoint closures."""

    lo: Fraction
    hi: Fraction
    closed_lo: bool
    closed_hi: bool

    def __str__(self) -> str:
        left = "[" if self.closed_lo else "("
        right = "]" if self.closed_hi else ")"
        return f"{left}{self.lo}, {self.hi}{right}"


@dataclass(frozen=True)
class EquilibriumPoint:
    """A single equilibrium with its exact state vector.

    i and j are the counts of saturated anticoordinator / coordinator groups
    as described in the module docstring. merged_case is set only for
    degenerate profiles analyzed under the override, naming which
    coincidence case produced the merge.
    """

    kind: EquilibriumKind
    i: int
    j: int
    state: tuple[Fraction, ...]
    abstract_value: Fraction
    stability: Optional[Stability] = None
    basin: Optional[BasinInterval] = None
    globally_stable: bool = False
    merged_case: Optional[str] = None

    @property
    def stable_kind(self) -> bool:
        return self.kind is not EquilibriumKind.COORD_DRIVEN


@dataclass(frozen=True)
class ContinuumDetected:
    """Marker for a shared anti/coord threshold: a continuum of equilibria."""

    value: Fraction
    anti_index: int
    coord_index: int


@dataclass(frozen=True)
class EquilibriumSet:
    """All equilibria of a profile, ascending by abstract value."""

    profile: PopulationProfile
    points: tuple[EquilibriumPoint, ...]
    continuum: tuple[ContinuumDetected, ...] = ()
    classified: bool = False

    @property
    def ordered_q(self) -> tuple[EquilibriumPoint, ...]:
        """The stable family q*_1 < ... < q*_Q (clean-cut and anti-driven)."""
        return tuple(pt for pt in self.points if pt.stable_kind)

    @property
    def separators(self) -> tuple[EquilibriumPoint, ...]:
        return tuple(pt for pt in self.points if not pt.stable_kind)

    @property
    def degenerate(self) -> bool:
        return bool(self.continuum) or any(pt.merged_case for pt in self.points)


def _clean_cut_state(profile: PopulationProfile, i: int, j: int) -> list[Fraction]:
    state = []
    for k, rho in enumerate(profile.rho_flat):
        if k < profile.p:
            state.append(rho if k < i else Fraction(0))
        else:
            within = profile.n_subpops - k
            state.append(rho if within <= j else Fraction(0))
    return state


def _make_point(
    profile: PopulationProfile,
    kind: EquilibriumKind,
    i: int,
    j: int,
    state: list[Fraction],
    merged_case: Optional[str] = None,
) -> EquilibriumPoint:
    point = EquilibriumPoint(
        kind=kind,
        i=i,
        j=j,
        state=tuple(state),
        abstract_value=sum(state, Fraction(0)),
        merged_case=merged_case,
    )
    assert vector_field(profile, point.state).zero_inside(), (
        f"constructed {kind.value} point ({i},{j}) is not stationary"
    )
    return point


def enumerate_equilibria(
    profile: PopulationProfile, allow_degenerate: bool = False
) -> EquilibriumSet:
    """All equilibria, kinds and exact states, ascending by abstract value.

    Raises AssumptionViolated when the threshold-uniqueness check fails and
    allow_degenerate is not set.
    """
    report = validate_assumption1(profile)
    if not report.passed and not allow_degenerate:
        raise AssumptionViolated(report.summary())
    cum = cumulative(profile)
    p, pp = profile.p, profile.p_prime
    points: list[EquilibriumPoint] = []

    for i in range(p + 1):
        for j in range(pp + 1):
            s = cum.pi_at(i) + cum.pi_prime_at(j)
            ok = True
            if i + 1 <= p:
                ok = ok and cum.tau_anti(i + 1) < s
            if j >= 1:
                ok = ok and cum.tau_coord(j) < s
            if i >= 1:
                ok = ok and s < cum.tau_anti(i)
            if j + 1 <= pp:
                ok = ok and s < cum.tau_coord(j + 1)
            if ok:
                points.append(
                    _make_point(profile, EquilibriumKind.CLEAN_CUT, i, j,
                                _clean_cut_state(profile, i, j))
                )

    for i in range(1, p + 1):
        j = cum.benchmark_coord(i)
        entry = cum.tau_anti(i) - (cum.pi_prime_at(j) + cum.pi_at(i - 1))
        if 0 < entry < profile.anti_rho[i - 1]:
            state = _clean_cut_state(profile, i - 1, j)
            state[i - 1] = entry
            points.append(
                _make_point(profile, EquilibriumKind.ANTICOORD_DRIVEN, i, j, state)
            )

    for j in range(1, pp + 1):
        i = cum.benchmark_anti(j)
        t = cum.tau_coord(j)
        if cum.pi_at(i) + cum.pi_prime_at(j - 1) < t < cum.pi_at(i) + cum.pi_prime_at(j):
            state = _clean_cut_state(profile, i, j - 1)
            state[profile.flat_of("coord", j)] = t - (cum.pi_prime_at(j - 1) + cum.pi_at(i))
            points.append(
                _make_point(profile, EquilibriumKind.COORD_DRIVEN, i, j, state)
            )

    for c in report.active_coincidences:
        if c.role == "anti":
            m = c.index
            entry = cum.tau_anti(m) - (cum.pi_prime_at(c.l) + cum.pi_at(m - 1))
            state = _clean_cut_state(profile, m - 1, c.l)
            state[m - 1] = entry
            points.append(
                _make_point(profile, EquilibriumKind.ANTICOORD_DRIVEN, m, c.l,
                            state, merged_case="i")
            )
        else:
            m = c.index
            state = _clean_cut_state(profile, c.k, m - 1)
            state[profile.flat_of("coord", m)] = (
                cum.tau_coord(m) - (cum.pi_prime_at(m - 1) + cum.pi_at(c.k))
            )
            points.append(
                _make_point(profile, EquilibriumKind.COORD_DRIVEN, c.k, m,
                            state, merged_case="ii")
            )

    points.sort(key=lambda pt: pt.abstract_value)
    if report.passed:
        values = [pt.abstract_value for pt in points]
        assert len(set(values)) == len(values), "equilibria share an abstract value"
    continuum = tuple(
        ContinuumDetected(d.value, d.anti_index, d.coord_index)
        for d in report.duplicates
    )
    return EquilibriumSet(profile, tuple(points), continuum)


def classify(eqset: EquilibriumSet) -> EquilibriumSet:
    """Fill in stability labels and abstract basins of attraction.

    For a profile passing the uniqueness check this enforces and uses the
    interleaving structure: stable, separator, stable, ..., stable. Basins
    run between neighboring separators. The last basin is closed at 1 (the
    all-A total always relaxes to the largest stable point); the first is
    open at 0 unless the stable point itself sits at abstract 0, which
    happens only for the all-B equilibrium. A lone stable point is flagged
    globally asymptotically stable. Raises MalformedSet when the
    alternation fails.

    Merged degenerate sets get stability labels only (a merged point keeps
    the stability of its kind) and no basins: the alternation can genuinely
    fail there.
    """
    if not eqset.points:
        raise MalformedSet("no equilibria; at least one stable point must exist")
    if eqset.degenerate:
        points = tuple(
            replace(
                pt,
                stability=Stability.STABLE if pt.stable_kind else Stability.UNSTABLE,
            )
            for pt in eqset.points
        )
        return replace(eqset, points=points, classified=True)

    flags = [pt.stable_kind for pt in eqset.points]
    if not flags[0] or not flags[-1]:
        raise MalformedSet("the smallest and largest equilibria must be stable")
    if any(a == b for a, b in zip(flags, flags[1:])):
        raise MalformedSet("stable points and separators must alternate")

    stable = [pt for pt in eqset.points if pt.stable_kind]
    seps = [pt for pt in eqset.points if not pt.stable_kind]
    Q = len(stable)
    out = []
    for pt in eqset.points:
        if not pt.stable_kind:
            out.append(replace(pt, stability=Stability.UNSTABLE))
            continue
        k = stable.index(pt)  # 0-based rank in the stable family
        lo = Fraction(0) if k == 0 else seps[k - 1].abstract_value
        hi = Fraction(1) if k == Q - 1 else seps[k].abstract_value
        basin = BasinInterval(
            lo,
            hi,
            closed_lo=(k == 0 and pt.abstract_value == 0),
            closed_hi=(k == Q - 1),
        )
        out.append(
            replace(
                pt,
                stability=Stability.STABLE,
                basin=basin,
                globally_stable=(Q == 1),
            )
        )
    return replace(eqset, points=tuple(out), classified=True)


def limit_set_at_separator(
    eqset: EquilibriumSet, k: int
) -> tuple[EquilibriumPoint, EquilibriumPoint, EquilibriumPoint]:
    """Limit set of trajectories started exactly at the k-th separator.

    k is 1-based with 1 <= k <= Q - 1: the separator between stable points
    q*_k and q*_{k+1}. The limit set is {q*_k, separator, q*_{k+1}}.
    """
    stable = eqset.ordered_q
    seps = eqset.separators
    if len(stable) < 2:
        raise IndexOutOfRange("a lone stable equilibrium has no separators")
    if not 1 <= k <= len(stable) - 1:
        raise IndexOutOfRange(f"separator index {k} not in [1, {len(stable) - 1}]")
    return stable[k - 1], seps[k - 1], stable[k]


def birkhoff_center(
    profile: PopulationProfile, allow_degenerate: bool = False
) -> tuple[EquilibriumPoint, ...]:
    """The set every invariant measure concentrates on as N grows.

    For mixed populations and coordinators-only populations this is the full
    equilibrium set. An anticoordinators-only population has a unique
    equilibrium (the abstract field is strictly decreasing), which is the
    center by itself; enumeration is run and checked rather than trusting
    the closed form.
    """
    eqset = classify(enumerate_equilibria(profile, allow_degenerate))
    if profile.p_prime == 0 and len(eqset.points) != 1:
        raise MalformedSet(
            f"anticoordinators-only profile with {len(eqset.points)} equilibria"
        )
    return eqset.points
