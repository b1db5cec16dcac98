"""Population model: profiles, thresholds, cumulative sums, best responses.

A population is split into anticoordinating subpopulations (play A when few
others do) and coordinating ones (play A when many others do). Subpopulation
k has proportion rho_k > 0 and threshold tau_k in (0, 1); proportions sum to
one exactly. Anticoordinator thresholds are strictly decreasing, coordinator
thresholds strictly increasing.

Flat indexing convention used everywhere in this package: anticoordinators
first (decreasing threshold), then coordinators in reverse (coordinator p'
down to coordinator 1), so the flat threshold vector is decreasing on the
anti block and decreasing on the coord block. Flat indices are 0-based;
within-role indices are 1-based like the i of pi_i. Both views are available
from PopulationProfile / CumulativeProfile.

An agent's best response depends on the fraction of A-players among the
*others*. With x the vector of per-subpopulation A-fractions and total(x)
their sum, a B-playing agent compares total(x) against its threshold, while
an A-playing agent compares against threshold + 1/N because it is included
in total(x) but not in its own reference fraction. Exact ties are resolved
by a TieRule.

All arithmetic in this module is exact over fractions.Fraction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence, Union

from .errors import (
    DuplicateThreshold,
    IndexOutOfRange,
    InvalidSize,
    MalformedNumber,
    ProportionsDoNotSumToOne,
    ThresholdOutOfRange,
)

Rational = Fraction

RationalLike = Union[Fraction, int, str]


class Strategy(Enum):
    """An agent's current strategy. Numeric values follow the 1/2 coding."""

    A = 1
    B = 2


class Preference(Enum):
    """Outcome of a best-response query. COIN means a fair-coin tie."""

    A = "A"
    B = "B"
    COIN = "coin"


class TieRule(Enum):
    """How an exactly indifferent agent resolves its best response.

    PREFER_A / PREFER_B break ties deterministically. UNIFORM_RANDOM returns
    COIN at exact ties. SELF_INCLUSIVE_PREFER_A compares the raw total
    (including the agent itself) against the threshold, with ties to A; the
    answer then does not depend on the agent's current strategy.
    """

    PREFER_A = "prefer-a"
    PREFER_B = "prefer-b"
    UNIFORM_RANDOM = "uniform"
    SELF_INCLUSIVE_PREFER_A = "self-inclusive"

    @classmethod
    def from_name(cls, name: str) -> "TieRule":
        for rule in cls:
            if rule.value == name:
                return rule
        raise ValueError(f"unknown tie rule {name!r}")


def parse_rational(value: RationalLike) -> Fraction:
    """Parse a plain decimal string or "num/den" string into a Fraction.

    Integers and Fractions pass through. Floats are rejected: config files
    are read with an exact JSON hook so float literals never reach here.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if "e" in text.lower():
            raise MalformedNumber(f"exponent notation not supported: {value!r}")
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise MalformedNumber(f"not a decimal or num/den string: {value!r}") from exc
    raise MalformedNumber(f"not a rational value: {value!r}")


def _sorted_role(
    rho: Sequence[Fraction], tau: Sequence[Fraction], role: str, descending: bool
) -> tuple[tuple[Fraction, ...], tuple[Fraction, ...]]:
    if len(rho) != len(tau):
        raise MalformedNumber(
            f"{role}: {len(rho)} proportions but {len(tau)} thresholds"
        )
    pairs = sorted(zip(tau, rho), reverse=descending)
    taus = tuple(t for t, _ in pairs)
    if len(set(taus)) != len(taus):
        raise DuplicateThreshold(f"duplicate {role} threshold")
    return tuple(r for _, r in pairs), taus


@dataclass(frozen=True)
class PopulationProfile:
    """A heterogeneous population of best responders.

    anti_tau is stored strictly decreasing and coord_tau strictly increasing;
    the constructor sorts the (rho, tau) pairs into that canonical order and
    validates positivity, the exact unit sum, and the open-interval range of
    every threshold.
    """

    anti_rho: tuple[Fraction, ...]
    anti_tau: tuple[Fraction, ...]
    coord_rho: tuple[Fraction, ...]
    coord_tau: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        anti_rho, anti_tau = _sorted_role(
            tuple(self.anti_rho), tuple(self.anti_tau), "anticoordinator", True
        )
        coord_rho, coord_tau = _sorted_role(
            tuple(self.coord_rho), tuple(self.coord_tau), "coordinator", False
        )
        object.__setattr__(self, "anti_rho", anti_rho)
        object.__setattr__(self, "anti_tau", anti_tau)
        object.__setattr__(self, "coord_rho", coord_rho)
        object.__setattr__(self, "coord_tau", coord_tau)
        if self.p + self.p_prime < 1:
            raise ProportionsDoNotSumToOne("population has no subpopulations")
        rhos = self.anti_rho + self.coord_rho
        if any(r <= 0 for r in rhos):
            raise ProportionsDoNotSumToOne("every proportion must be positive")
        total = sum(rhos)
        if total != 1:
            raise ProportionsDoNotSumToOne(f"proportions sum to {total}, not 1")
        for t in self.anti_tau + self.coord_tau:
            if not (0 < t < 1):
                raise ThresholdOutOfRange(f"threshold {t} outside (0, 1)")

    @property
    def p(self) -> int:
        return len(self.anti_rho)

    @property
    def p_prime(self) -> int:
        return len(self.coord_rho)

    @property
    def n_subpops(self) -> int:
        return self.p + self.p_prime

    @cached_property
    def rho_flat(self) -> tuple[Fraction, ...]:
        return self.anti_rho + tuple(reversed(self.coord_rho))

    @cached_property
    def tau_flat(self) -> tuple[Fraction, ...]:
        return self.anti_tau + tuple(reversed(self.coord_tau))

    def is_anti_flat(self, k: int) -> bool:
        if not 0 <= k < self.n_subpops:
            raise IndexOutOfRange(f"flat index {k} not in [0, {self.n_subpops})")
        return k < self.p

    def role_of(self, k: int) -> tuple[str, int]:
        """Map a 0-based flat index to ("anti", i) or ("coord", j), 1-based."""
        if self.is_anti_flat(k):
            return ("anti", k + 1)
        return ("coord", self.n_subpops - k)

    def flat_of(self, role: str, index: int) -> int:
        """Map a 1-based within-role index back to the 0-based flat index."""
        if role == "anti":
            if not 1 <= index <= self.p:
                raise IndexOutOfRange(f"anticoordinator index {index} not in [1, {self.p}]")
            return index - 1
        if role == "coord":
            if not 1 <= index <= self.p_prime:
                raise IndexOutOfRange(f"coordinator index {index} not in [1, {self.p_prime}]")
            return self.n_subpops - index
        raise IndexOutOfRange(f"unknown role {role!r}")


@dataclass(frozen=True)
class CumulativeProfile:
    """Prefix sums pi_i, pi'_j of the proportions plus threshold sentinels.

    pi holds (pi_0, ..., pi_p) and pi_prime holds (pi'_0, ..., pi'_p'); the
    accessors extend both with the out-of-range sentinels pi_{-1} = 0,
    pi_{p+1} = pi_p (same for pi') and the threshold sentinels tau_0 = 1,
    tau_{p+1} = 0, tau'_0 = 0, tau'_{p'+1} = 1.
    """

    profile: PopulationProfile
    pi: tuple[Fraction, ...]
    pi_prime: tuple[Fraction, ...]
    min_threshold_gap: Fraction

    def pi_at(self, i: int) -> Fraction:
        p = self.profile.p
        if i == -1:
            return Fraction(0)
        if i == p + 1:
            return self.pi[p]
        if 0 <= i <= p:
            return self.pi[i]
        raise IndexOutOfRange(f"pi index {i} not in [-1, {p + 1}]")

    def pi_prime_at(self, j: int) -> Fraction:
        pp = self.profile.p_prime
        if j == -1:
            return Fraction(0)
        if j == pp + 1:
            return self.pi_prime[pp]
        if 0 <= j <= pp:
            return self.pi_prime[j]
        raise IndexOutOfRange(f"pi' index {j} not in [-1, {pp + 1}]")

    def tau_anti(self, i: int) -> Fraction:
        """tau_i with sentinels tau_0 = 1 and tau_{p+1} = 0."""
        p = self.profile.p
        if i == 0:
            return Fraction(1)
        if i == p + 1:
            return Fraction(0)
        if 1 <= i <= p:
            return self.profile.anti_tau[i - 1]
        raise IndexOutOfRange(f"anticoordinator threshold index {i} not in [0, {p + 1}]")

    def tau_coord(self, j: int) -> Fraction:
        """tau'_j with sentinels tau'_0 = 0 and tau'_{p'+1} = 1."""
        pp = self.profile.p_prime
        if j == 0:
            return Fraction(0)
        if j == pp + 1:
            return Fraction(1)
        if 1 <= j <= pp:
            return self.profile.coord_tau[j - 1]
        raise IndexOutOfRange(f"coordinator threshold index {j} not in [0, {pp + 1}]")

    def tau_flat(self, k: int) -> Fraction:
        if not 0 <= k < self.profile.n_subpops:
            raise IndexOutOfRange(f"flat index {k} not in [0, {self.profile.n_subpops})")
        return self.profile.tau_flat[k]

    def benchmark_coord(self, i: int) -> int:
        """Largest j with tau'_j < tau_i: the coordinator count at anti threshold i."""
        t = self.tau_anti(i)
        j = 0
        for idx, tc in enumerate(self.profile.coord_tau, start=1):
            if tc < t:
                j = idx
            else:
                break
        return j

    def benchmark_anti(self, j: int) -> int:
        """Largest i with tau_i > tau'_j: the anticoordinator count at coord threshold j."""
        t = self.tau_coord(j)
        i = 0
        for idx, ta in enumerate(self.profile.anti_tau, start=1):
            if ta > t:
                i = idx
            else:
                break
        return i

    def counts_below(self, total: Fraction) -> tuple[int, int]:
        """(i, j) with i = #anti thresholds > total, j = #coord thresholds < total.

        Thresholds exactly equal to total are counted on neither side, so on
        an open region this is the region label and at a threshold it is the
        label of the adjacent region that excludes the touching group.
        """
        i = sum(1 for t in self.profile.anti_tau if t > total)
        j = sum(1 for t in self.profile.coord_tau if t < total)
        return i, j

    def counts_at_or_below(self, total: Fraction) -> tuple[int, int]:
        """Like counts_below but counts thresholds equal to total as active."""
        i = sum(1 for t in self.profile.anti_tau if t >= total)
        j = sum(1 for t in self.profile.coord_tau if t <= total)
        return i, j

    def thresholds_at(self, total: Fraction) -> list[tuple[str, int]]:
        """All (role, 1-based index) whose threshold equals total exactly."""
        hits: list[tuple[str, int]] = []
        for idx, t in enumerate(self.profile.anti_tau, start=1):
            if t == total:
                hits.append(("anti", idx))
        for idx, t in enumerate(self.profile.coord_tau, start=1):
            if t == total:
                hits.append(("coord", idx))
        return hits

    def sorted_thresholds(self) -> tuple[tuple[Fraction, str, int], ...]:
        """All thresholds as (value, role, 1-based index), ascending by value."""
        items = [(t, "anti", i) for i, t in enumerate(self.profile.anti_tau, start=1)]
        items += [(t, "coord", j) for j, t in enumerate(self.profile.coord_tau, start=1)]
        items.sort(key=lambda item: item[0])
        return tuple(items)


def cumulative(profile: PopulationProfile) -> CumulativeProfile:
    """Prefix sums and the minimum pairwise threshold distance."""
    pi = [Fraction(0)]
    for r in profile.anti_rho:
        pi.append(pi[-1] + r)
    pip = [Fraction(0)]
    for r in profile.coord_rho:
        pip.append(pip[-1] + r)
    taus = sorted(profile.anti_tau + profile.coord_tau)
    if len(taus) >= 2:
        gap = min(b - a for a, b in zip(taus, taus[1:]))
    else:
        gap = Fraction(1)
    return CumulativeProfile(profile, tuple(pi), tuple(pip), gap)


def valid_sizes(profile: PopulationProfile, n_max: int) -> list[int]:
    """All N <= n_max for which every N * rho_k is an integer, ascending."""
    base = 1
    for r in profile.rho_flat:
        base = base * r.denominator // math.gcd(base, r.denominator)
    return list(range(base, n_max + 1, base))


def preferred_strategy(
    profile: PopulationProfile,
    cum: CumulativeProfile,
    k: int,
    total_x: RationalLike,
    current: Strategy,
    N: int,
    tie: TieRule = TieRule.PREFER_A,
) -> Preference:
    """Best response of an agent in flat subpopulation k.

    total_x is the full A-fraction of the population including the agent
    itself; an A-player's comparison point is therefore shifted by 1/N. The
    shifted comparisons are exact:

      anticoordinator, current B: A iff total <= tau     (ties per rule)
      anticoordinator, current A: A iff total <= tau + 1/N
      coordinator,     current B: A iff total >= tau
      coordinator,     current A: A iff total >= tau + 1/N

    Under SELF_INCLUSIVE_PREFER_A both rows collapse to the unshifted
    comparison with ties to A.
    """
    if not 0 <= k < profile.n_subpops:
        raise IndexOutOfRange(f"flat index {k} not in [0, {profile.n_subpops})")
    if N < 1:
        raise InvalidSize(f"population size {N} must be at least 1")
    theta = cum.tau_flat(k)
    total = parse_rational(total_x)
    anti = k < profile.p
    if tie is TieRule.SELF_INCLUSIVE_PREFER_A:
        prefers_a = total <= theta if anti else total >= theta
        return Preference.A if prefers_a else Preference.B
    cut = theta if current is Strategy.B else theta + Fraction(1, N)
    if anti:
        if total < cut:
            return Preference.A
        if total > cut:
            return Preference.B
    else:
        if total > cut:
            return Preference.A
        if total < cut:
            return Preference.B
    if tie is TieRule.PREFER_A:
        return Preference.A
    if tie is TieRule.PREFER_B:
        return Preference.B
    return Preference.COIN


@dataclass(frozen=True)
class SumCoincidence:
    """A cumulative sum pi_k + pi'_l that lands exactly on a threshold.

    role/index name the threshold that is hit. remark_case is "i" for an
    anticoordinator threshold and "ii" for a coordinator threshold. active
    means the coincidence is benchmark-consistent, i.e. it actually merges
    two equilibria; latent coincidences trip the literal assumption check
    but are not dynamically realizable.
    """

    k: int
    l: int
    value: Fraction
    role: str
    index: int
    remark_case: str
    active: bool


@dataclass(frozen=True)
class DuplicatePair:
    """An anticoordinator and a coordinator sharing a threshold value."""

    value: Fraction
    anti_index: int
    coord_index: int
    remark_case: str = "iii"


@dataclass(frozen=True)
class Assumption1Report:
    """Outcome of the threshold-uniqueness / cumulative-sum check.

    passed is the literal check: no duplicate thresholds and no cumulative
    sum pi_k + pi'_l equal to any threshold, over all k in 0..p and l in
    0..p'. Analysis entry points refuse a failing profile unless called with
    allow_degenerate=True.
    """

    passed: bool
    coincidences: tuple[SumCoincidence, ...]
    duplicates: tuple[DuplicatePair, ...]

    @property
    def active_coincidences(self) -> tuple[SumCoincidence, ...]:
        return tuple(c for c in self.coincidences if c.active)

    def summary(self) -> str:
        if self.passed:
            return "PASS: thresholds distinct and no cumulative sum hits a threshold"
        lines = ["FAIL:"]
        for d in self.duplicates:
            lines.append(
                f"  case (iii): anticoordinator {d.anti_index} and coordinator "
                f"{d.coord_index} share threshold {d.value} (continuum of equilibria)"
            )
        for c in self.coincidences:
            kind = "active" if c.active else "latent"
            lines.append(
                f"  case ({c.remark_case}), {kind}: pi_{c.k} + pi'_{c.l} = {c.value} "
                f"equals {'anticoordinator' if c.role == 'anti' else 'coordinator'} "
                f"threshold {c.index}"
            )
        return "\n".join(lines)


def validate_assumption1(profile: PopulationProfile) -> Assumption1Report:
    """Check threshold uniqueness and that no pi_k + pi'_l hits a threshold.

    Never raises; returns a structured report listing every violation. A
    coincidence is marked active when the opposite-role cumulative index is
    the benchmark at that threshold and the same-role index is adjacent to
    the threshold's own subpopulation, which is exactly when two equilibrium
    candidates merge into one point.
    """
    cum = cumulative(profile)
    duplicates = []
    for i, ta in enumerate(profile.anti_tau, start=1):
        for j, tc in enumerate(profile.coord_tau, start=1):
            if ta == tc:
                duplicates.append(DuplicatePair(ta, i, j))
    coincidences = []
    for k in range(profile.p + 1):
        for l in range(profile.p_prime + 1):
            s = cum.pi_at(k) + cum.pi_prime_at(l)
            for role, index in cum.thresholds_at(s):
                if role == "anti":
                    active = l == cum.benchmark_coord(index) and k in (index - 1, index)
                    case = "i"
                else:
                    active = k == cum.benchmark_anti(index) and l in (index - 1, index)
                    case = "ii"
                coincidences.append(
                    SumCoincidence(k, l, s, role, index, case, active)
                )
    return Assumption1Report(
        passed=not coincidences and not duplicates,
        coincidences=tuple(coincidences),
        duplicates=tuple(duplicates),
    )


def parse_profile(doc: Union[str, Mapping]) -> PopulationProfile:
    """Build a profile from a JSON document or an already-parsed mapping.

    Expected shape:

        {"anticoordinators": [{"rho": "0.6", "tau": "0.85"}, ...],
         "coordinators":     [{"rho": "3/28", "tau": "0.321"}, ...]}

    rho/tau values may be decimal strings, "num/den" strings, or bare JSON
    numbers (read exactly, never through float). Either role list may be
    absent or empty, but not both. Entry order is irrelevant: pairs are
    sorted into the canonical threshold order.
    """
    if isinstance(doc, str):
        try:
            doc = json.loads(doc, parse_float=Fraction, parse_int=int)
        except json.JSONDecodeError as exc:
            raise MalformedNumber(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, Mapping):
        raise MalformedNumber("config must be a JSON object")
    unknown = set(doc) - {"anticoordinators", "coordinators"}
    if unknown:
        raise MalformedNumber(
            f"unknown config keys {sorted(unknown)}; "
            "expected anticoordinators and coordinators"
        )

    def read_group(name: str) -> tuple[tuple[Fraction, ...], tuple[Fraction, ...]]:
        entries = doc.get(name, [])
        if not isinstance(entries, Iterable) or isinstance(entries, (str, bytes)):
            raise MalformedNumber(f"{name} must be a list of objects")
        rhos, taus = [], []
        for entry in entries:
            if not isinstance(entry, Mapping) or "rho" not in entry or "tau" not in entry:
                raise MalformedNumber(f"every {name} entry needs rho and tau")
            rhos.append(parse_rational(entry["rho"]))
            taus.append(parse_rational(entry["tau"]))
        return tuple(rhos), tuple(taus)

    anti_rho, anti_tau = read_group("anticoordinators")
    coord_rho, coord_tau = read_group("coordinators")
    return PopulationProfile(anti_rho, anti_tau, coord_rho, coord_tau)


def profile_to_doc(profile: PopulationProfile) -> dict:
    """Inverse of parse_profile, with exact string values."""
    return {
        "anticoordinators": [
            {"rho": str(r), "tau": str(t)}
            for r, t in zip(profile.anti_rho, profile.anti_tau)
        ],
        "coordinators": [
            {"rho": str(r), "tau": str(t)}
            for r, t in zip(profile.coord_rho, profile.coord_tau)
        ],
    }
