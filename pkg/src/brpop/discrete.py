"""Finite-N asynchronous best-response dynamics as a Markov chain.

States are integer count vectors: counts[k] agents of subpopulation k play
A, with 0 <= counts[k] <= N * rho_k. Each step activates one uniformly
random agent, which switches iff its best response differs from its current
strategy (a fair coin under the uniform tie rule at exact indifference).
Transition probabilities are exact rationals; simulation runs on integer
counts with precomputed comparison cutoffs, so a million steps never touch
rational arithmetic.

Closed communicating classes are the strongly connected components of the
positive-probability transition graph with no outgoing edge; their unique
stationary distributions are computed by state-elimination (GTH), exactly
for small classes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .errors import InvalidSize, StateOutOfSpace, StateSpaceTooLarge
from .model import (
    CumulativeProfile,
    PopulationProfile,
    Preference,
    Strategy,
    TieRule,
    cumulative,
    preferred_strategy,
)

STATE_CAP_DEFAULT = 10**6


@dataclass(frozen=True)
class DiscreteState:
    """Counts of A-players per subpopulation in a population of size n."""

    n: int
    counts: tuple[int, ...]

    @property
    def total_count(self) -> int:
        return sum(self.counts)

    @property
    def total_x(self) -> Fraction:
        return Fraction(self.total_count, self.n)

    def x(self, k: int) -> Fraction:
        return Fraction(self.counts[k], self.n)

    def as_fractions(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(c, self.n) for c in self.counts)


def capacities(profile: PopulationProfile, n: int) -> tuple[int, ...]:
    """Per-subpopulation agent counts N * rho_k; InvalidSize if fractional."""
    if n < 1:
        raise InvalidSize(f"population size {n} must be at least 1")
    caps = []
    for rho in profile.rho_flat:
        cap = rho * n
        if cap.denominator != 1:
            raise InvalidSize(f"N = {n} makes {rho} * N = {cap} non-integer")
        caps.append(int(cap))
    return tuple(caps)


def check_state(profile: PopulationProfile, state: DiscreteState) -> tuple[int, ...]:
    caps = capacities(profile, state.n)
    if len(state.counts) != profile.n_subpops:
        raise StateOutOfSpace(
            f"state has {len(state.counts)} components, profile has {profile.n_subpops}"
        )
    for k, (c, cap) in enumerate(zip(state.counts, caps)):
        if not 0 <= c <= cap:
            raise StateOutOfSpace(f"count {c} for subpopulation {k} outside [0, {cap}]")
    return caps


@dataclass(frozen=True)
class TransitionDistribution:
    """One row of the transition kernel; probabilities sum to 1 exactly."""

    source: DiscreteState
    entries: tuple[tuple[DiscreteState, Fraction], ...]

    def probability_of(self, target: DiscreteState) -> Fraction:
        for s, p in self.entries:
            if s == target:
                return p
        return Fraction(0)


def _switch_weights(
    profile: PopulationProfile,
    cum: CumulativeProfile,
    k: int,
    total: Fraction,
    n: int,
    tie: TieRule,
) -> tuple[Fraction, Fraction]:
    """(P[B-player answers A], P[A-player answers B]) for subpopulation k."""

    def weight(pref: Preference, toward: Preference) -> Fraction:
        if pref is toward:
            return Fraction(1)
        if pref is Preference.COIN:
            return Fraction(1, 2)
        return Fraction(0)

    up = weight(
        preferred_strategy(profile, cum, k, total, Strategy.B, n, tie), Preference.A
    )
    down = weight(
        preferred_strategy(profile, cum, k, total, Strategy.A, n, tie), Preference.B
    )
    return up, down


def transition_distribution(
    profile: PopulationProfile,
    state: DiscreteState,
    tie: TieRule = TieRule.PREFER_A,
) -> TransitionDistribution:
    """Exact one-step distribution from state, self-loop included."""
    caps = check_state(profile, state)
    cum = cumulative(profile)
    n = state.n
    total = state.total_x
    entries = []
    self_loop = Fraction(1)
    for k, (c, cap) in enumerate(zip(state.counts, caps)):
        up_w, down_w = _switch_weights(profile, cum, k, total, n, tie)
        up = Fraction(cap - c, n) * up_w
        if up:
            target = list(state.counts)
            target[k] += 1
            entries.append((DiscreteState(n, tuple(target)), up))
            self_loop -= up
        down = Fraction(c, n) * down_w
        if down:
            target = list(state.counts)
            target[k] -= 1
            entries.append((DiscreteState(n, tuple(target)), down))
            self_loop -= down
    if self_loop:
        entries.append((state, self_loop))
    return TransitionDistribution(state, tuple(entries))


def step(
    profile: PopulationProfile,
    state: DiscreteState,
    rng: np.random.Generator,
    tie: TieRule = TieRule.PREFER_A,
) -> DiscreteState:
    """Sample one transition by activating a uniform agent.

    The induced distribution over successors equals transition_distribution
    exactly: the activated agent lands in subpopulation k playing A with
    probability counts[k]/N, playing B with (cap_k - counts[k])/N, and a
    coin preference switches with probability 1/2.
    """
    caps = check_state(profile, state)
    cum = cumulative(profile)
    n = state.n
    m = int(rng.integers(0, n))
    offset = 0
    for k, cap in enumerate(caps):
        if m < offset + cap:
            break
        offset += cap
    is_a = (m - offset) < state.counts[k]
    pref = preferred_strategy(
        profile, cum, k, state.total_x, Strategy.A if is_a else Strategy.B, n, tie
    )
    if pref is Preference.COIN:
        pref = Preference.A if rng.random() < 0.5 else Preference.B
    delta = 0
    if is_a and pref is Preference.B:
        delta = -1
    elif not is_a and pref is Preference.A:
        delta = 1
    if delta == 0:
        return state
    counts = list(state.counts)
    counts[k] += delta
    return DiscreteState(n, tuple(counts))


def _cut_tables(
    profile: PopulationProfile, n: int, tie: TieRule
) -> list[tuple[bool, int, Optional[int], int, Optional[int]]]:
    """Integer comparison tables replicating preferred_strategy on counts.

    Per subpopulation: (is_anti, b_cut, b_tie, a_cut, a_tie). For an
    anticoordinator a B-player deterministically answers A iff
    total_count <= b_cut, for a coordinator iff total_count >= b_cut; the
    optional tie count triggers a fair coin first. The a_* pair is the same
    test for an A-player (threshold shifted by one agent).
    """
    tables = []
    for k, tau in enumerate(profile.tau_flat):
        g = tau * n
        integral = g.denominator == 1
        anti = k < profile.p
        b_tie: Optional[int] = None
        a_tie: Optional[int] = None
        if anti:
            if tie is TieRule.PREFER_A:
                b_cut, a_cut = math.floor(g), math.floor(g) + 1
            elif tie is TieRule.PREFER_B:
                b_cut, a_cut = math.ceil(g) - 1, math.ceil(g)
            elif tie is TieRule.UNIFORM_RANDOM:
                b_cut, a_cut = math.ceil(g) - 1, math.ceil(g)
                if integral:
                    b_tie, a_tie = int(g), int(g) + 1
            else:  # SELF_INCLUSIVE_PREFER_A
                b_cut = a_cut = math.floor(g)
        else:
            if tie is TieRule.PREFER_A:
                b_cut, a_cut = math.ceil(g), math.ceil(g) + 1
            elif tie is TieRule.PREFER_B:
                b_cut, a_cut = math.floor(g) + 1, math.floor(g) + 2
            elif tie is TieRule.UNIFORM_RANDOM:
                b_cut, a_cut = math.floor(g) + 1, math.floor(g) + 2
                if integral:
                    b_tie, a_tie = int(g), int(g) + 1
            else:
                b_cut = a_cut = math.ceil(g)
        tables.append((anti, b_cut, b_tie, a_cut, a_tie))
    return tables


@dataclass(frozen=True)
class TrajectoryStats:
    """Post-burn-in summary of one simulated trajectory."""

    visited_min_total: Fraction
    visited_max_total: Fraction
    amplitude: Fraction
    final_state: DiscreteState
    steps: int
    seed: int


def simulate(
    profile: PopulationProfile,
    state0: DiscreteState,
    steps: int,
    burn_in: int = 0,
    seed: int = 0,
    tie: TieRule = TieRule.PREFER_A,
    on_state: Optional[Callable[[int, int, Sequence[int]], None]] = None,
) -> TrajectoryStats:
    """Run the chain for a number of steps and track the total's range.

    Minimum and maximum are taken over the states with index >= burn_in
    (state 0 is the initial state). The agent stream and the coin stream are
    spawned from SeedSequence(seed), so runs are reproducible and the agent
    sequence does not depend on the tie rule. on_state, when given, is
    called as on_state(index, total_count, counts) for every state along the
    trajectory including the initial one; counts is a live buffer, copy it
    if it is retained.
    """
    caps = check_state(profile, state0)
    agent_ss, coin_ss = np.random.SeedSequence(seed).spawn(2)
    agent_rng = np.random.Generator(np.random.PCG64(agent_ss))
    coin_rng = np.random.Generator(np.random.PCG64(coin_ss))
    tables = _cut_tables(profile, state0.n, tie)
    bounds = []
    off = 0
    for cap in caps:
        off += cap
        bounds.append(off)

    counts = list(state0.counts)
    total = sum(counts)
    mn = mx = total if burn_in <= 0 else None
    if on_state is not None:
        on_state(0, total, counts)

    coin_buf: list[int] = []

    def next_coin() -> int:
        if not coin_buf:
            coin_buf.extend(coin_rng.integers(0, 2, size=256).tolist())
        return coin_buf.pop()

    block = 8192
    done = 0
    nsub = len(caps)
    while done < steps:
        take = min(block, steps - done)
        agents = agent_rng.integers(0, state0.n, size=take).tolist()
        for m in agents:
            done += 1
            k = 0
            while k < nsub and m >= bounds[k]:
                k += 1
            is_a = (m - (bounds[k] - caps[k])) < counts[k]
            anti, b_cut, b_tie, a_cut, a_tie = tables[k]
            cut, tie_at = (a_cut, a_tie) if is_a else (b_cut, b_tie)
            if tie_at is not None and total == tie_at:
                pref_a = bool(next_coin())
            elif anti:
                pref_a = total <= cut
            else:
                pref_a = total >= cut
            if is_a and not pref_a:
                counts[k] -= 1
                total -= 1
            elif not is_a and pref_a:
                counts[k] += 1
                total += 1
            if done >= burn_in:
                if mn is None:
                    mn = mx = total
                elif total < mn:
                    mn = total
                elif total > mx:
                    mx = total
            if on_state is not None:
                on_state(done, total, counts)

    n = state0.n
    if mn is None:  # burn_in beyond the last step
        mn = mx = total
    return TrajectoryStats(
        visited_min_total=Fraction(mn, n),
        visited_max_total=Fraction(mx, n),
        amplitude=Fraction(mx - mn, n),
        final_state=DiscreteState(n, tuple(counts)),
        steps=steps,
        seed=seed,
    )


def expected_drift(
    profile: PopulationProfile,
    state: DiscreteState,
    tie: TieRule = TieRule.PREFER_A,
) -> tuple[Fraction, ...]:
    """N times the expected one-step change of each component, exactly."""
    caps = check_state(profile, state)
    cum = cumulative(profile)
    total = state.total_x
    drift = []
    for k, (c, cap) in enumerate(zip(state.counts, caps)):
        up_w, down_w = _switch_weights(profile, cum, k, total, state.n, tie)
        drift.append(
            Fraction(cap - c, state.n) * up_w - Fraction(c, state.n) * down_w
        )
    return tuple(drift)


def noise_bound(profile: PopulationProfile) -> float:
    """Uniform bound on the Euclidean norm of the per-step martingale noise.

    One step changes N * X by a unit vector at most, and the drift vector is
    componentwise bounded by 1 + rho_k, so the centered increment has norm
    at most sqrt(sum (1 + rho_k)^2).
    """
    return math.sqrt(float(sum((1 + rho) ** 2 for rho in profile.rho_flat)))


@dataclass(frozen=True)
class ClosedClass:
    """A closed communicating class and its stationary distribution."""

    states: tuple[DiscreteState, ...]
    is_singleton: bool
    abstract_range: tuple[Fraction, Fraction]
    invariant_measure: dict

    def measure_of(self, predicate: Callable[[DiscreteState], bool]) -> Fraction:
        return sum(
            (p for s, p in self.invariant_measure.items() if predicate(s)),
            Fraction(0),
        )


def _move_tables(
    profile: PopulationProfile, n: int, tie: TieRule
) -> tuple[list[list[bool]], list[list[bool]]]:
    """Positive-probability move masks by (subpopulation, total count).

    up_ok[k][t]: a B-player of subpopulation k switches to A with positive
    probability at total count t; down_ok[k][t] likewise for an A-player
    switching to B. Built directly from preferred_strategy so the graph used
    for closed classes matches the kernel by construction.
    """
    cum = cumulative(profile)
    up_ok, down_ok = [], []
    for k in range(profile.n_subpops):
        up_k, down_k = [], []
        for t in range(n + 1):
            total = Fraction(t, n)
            up = preferred_strategy(profile, cum, k, total, Strategy.B, n, tie)
            down = preferred_strategy(profile, cum, k, total, Strategy.A, n, tie)
            up_k.append(up is not Preference.B)
            down_k.append(down is not Preference.A)
        up_ok.append(up_k)
        down_ok.append(down_k)
    return up_ok, down_ok


def _tarjan_scc(n_vertices: int, neighbors: Callable[[int], Iterable[int]]) -> list[list[int]]:
    """Iterative Tarjan; components are returned in reverse topological order."""
    index = [-1] * n_vertices
    low = [0] * n_vertices
    on_stack = [False] * n_vertices
    stack: list[int] = []
    components: list[list[int]] = []
    counter = 0
    for root in range(n_vertices):
        if index[root] != -1:
            continue
        work = [(root, iter(neighbors(root)))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, iter(neighbors(w))))
                    advanced = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                components.append(comp)
    return components


def _gth_exact(rows: list[dict]) -> list[Fraction]:
    """Stationary vector of an irreducible stochastic matrix by GTH."""
    n = len(rows)
    P = [[Fraction(0)] * n for _ in range(n)]
    for i, row in enumerate(rows):
        for j, p in row.items():
            P[i][j] = Fraction(p)
    for m in range(n - 1, 0, -1):
        s = sum(P[m][:m], Fraction(0))
        for i in range(m):
            P[i][m] /= s
        for i in range(m):
            pim = P[i][m]
            if pim:
                for j in range(m):
                    P[i][j] += pim * P[m][j]
    mu = [Fraction(0)] * n
    mu[0] = Fraction(1)
    for k in range(1, n):
        mu[k] = sum((mu[i] * P[i][k] for i in range(k)), Fraction(0))
    total = sum(mu, Fraction(0))
    return [v / total for v in mu]


def _gth_float(rows: list[dict]) -> list[float]:
    n = len(rows)
    P = np.zeros((n, n))
    for i, row in enumerate(rows):
        for j, p in row.items():
            P[i, j] = float(p)
    for m in range(n - 1, 0, -1):
        s = P[m, :m].sum()
        P[:m, m] /= s
        P[:m, :m] += np.outer(P[:m, m], P[m, :m])
    mu = np.zeros(n)
    mu[0] = 1.0
    for k in range(1, n):
        mu[k] = mu[:k] @ P[:k, k]
    return (mu / mu.sum()).tolist()


def _power_iteration(rows: list[dict], tol: float = 1e-12, max_iter: int = 10**6) -> list[float]:
    n = len(rows)
    P = np.zeros((n, n))
    for i, row in enumerate(rows):
        for j, p in row.items():
            P[i, j] = float(p)
    mu = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = mu @ P
        if np.abs(nxt - mu).max() < tol:
            mu = nxt
            break
        mu = nxt
    return (mu / mu.sum()).tolist()


EXACT_SOLVE_MAX = 400
DENSE_SOLVE_MAX = 2000


def closed_classes(
    profile: PopulationProfile,
    n: int,
    tie: TieRule = TieRule.PREFER_A,
    state_cap: int = STATE_CAP_DEFAULT,
) -> list[ClosedClass]:
    """All closed communicating classes of the chain at size n.

    Enumerates the full state space (StateSpaceTooLarge above state_cap),
    takes strongly connected components of the positive-probability graph,
    and keeps those with no outgoing edge. Stationary distributions are
    exact for classes up to 400 states, float GTH up to 2000, and power
    iteration beyond. Classes are sorted by their abstract range.
    """
    caps = capacities(profile, n)
    size = 1
    for cap in caps:
        size *= cap + 1
        if size > state_cap:
            raise StateSpaceTooLarge(
                f"state space exceeds cap {state_cap} for N = {n}"
            )
    nsub = len(caps)
    strides = [0] * nsub
    acc = 1
    for k in range(nsub - 1, -1, -1):
        strides[k] = acc
        acc *= caps[k] + 1

    def decode(idx: int) -> tuple[int, ...]:
        counts = []
        for k in range(nsub):
            counts.append(idx // strides[k] % (caps[k] + 1))
        return tuple(counts)

    up_ok, down_ok = _move_tables(profile, n, tie)

    def neighbors(idx: int) -> list[int]:
        counts = decode(idx)
        t = sum(counts)
        out = []
        for k in range(nsub):
            if counts[k] < caps[k] and up_ok[k][t]:
                out.append(idx + strides[k])
            if counts[k] > 0 and down_ok[k][t]:
                out.append(idx - strides[k])
        return out

    components = _tarjan_scc(size, neighbors)
    comp_of = [0] * size
    for ci, comp in enumerate(components):
        for v in comp:
            comp_of[v] = ci

    classes = []
    for ci, comp in enumerate(components):
        closed = all(comp_of[w] == ci for v in comp for w in neighbors(v))
        if not closed:
            continue
        comp_sorted = sorted(comp)
        states = tuple(DiscreteState(n, decode(v)) for v in comp_sorted)
        totals = [s.total_x for s in states]
        if len(states) == 1:
            measure = {states[0]: Fraction(1)}
        else:
            pos = {v: i for i, v in enumerate(comp_sorted)}
            rows: list[dict] = []
            for v in comp_sorted:
                dist = transition_distribution(
                    profile, DiscreteState(n, decode(v)), tie
                )
                row = {}
                for target, prob in dist.entries:
                    t_idx = 0
                    for k, c in enumerate(target.counts):
                        t_idx += c * strides[k]
                    row[pos[t_idx]] = prob
                rows.append(row)
            if len(states) <= EXACT_SOLVE_MAX:
                mu = _gth_exact(rows)
            elif len(states) <= DENSE_SOLVE_MAX:
                mu = _gth_float(rows)
            else:
                mu = _power_iteration(rows)
            measure = dict(zip(states, mu))
        classes.append(
            ClosedClass(
                states=states,
                is_singleton=len(states) == 1,
                abstract_range=(min(totals), max(totals)),
                invariant_measure=measure,
            )
        )
    classes.sort(key=lambda c: c.abstract_range)
    return classes


def invariant_measure_mass(
    classes: Sequence[ClosedClass], region: Callable[[DiscreteState], bool]
) -> list[Fraction]:
    """Stationary mass each class puts on states satisfying the predicate."""
    return [cls.measure_of(region) for cls in classes]
