"""Cache admission policies over ranked request distributions.

A workload is an i.i.d. request stream over items ranked by probability
(power-law or explicit).  The simulator compares admission policies under a
two-level cost model against the static optimum (the top-K items by true
probability, which are always items 1..K here since ranks are sorted), and
reports running per-request cost, hit rates, and convergence diagnostics on
a geometric sampling grid.

Exact quantities (rank probabilities, boundary gaps, swap-time moments) are
computed in rational arithmetic; the stream simulation itself runs in
float64 with one dedicated bit-generator per replication and common random
numbers across policies, so policy deltas are paired comparisons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from typing import NamedTuple

import numpy as np

from .errors import AbsoluteContinuityError, PltError
from .model import as_fraction, format_rational, kl_at_prefix
from .zipfmath import is_integral, pair_ratio, power_partial_sum, power_sum_float, power_sum_pair

POLICIES = ("prior", "lfu", "lru", "bayesian")

_MAX_STREAM_CELLS = 200_000_000


@dataclass(frozen=True)
class WorkloadSpec:
    """Ranked i.i.d. request workload: power-law or explicit probabilities."""

    horizon: int
    seed: int
    items: int | None = None
    alpha: Fraction | None = None
    probs: tuple[Fraction, ...] | None = None

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")
        if self.probs is not None:
            if self.items is not None or self.alpha is not None:
                raise ValueError("give either explicit probs or (items, alpha), not both")
            probs = tuple(as_fraction(p) for p in self.probs)
            if not probs:
                raise ValueError("probs must be nonempty")
            if any(p <= 0 for p in probs):
                raise ValueError("probabilities must be positive")
            if any(a < b for a, b in zip(probs, probs[1:])):
                raise ValueError("probabilities must be ranked in nonincreasing order")
            if sum(probs) != 1:
                raise ValueError("probabilities must sum to 1")
            object.__setattr__(self, "probs", probs)
        else:
            if self.items is None or self.alpha is None:
                raise ValueError("give either explicit probs or (items, alpha)")
            if self.items < 1:
                raise ValueError("items must be >= 1")
            alpha = as_fraction(self.alpha)
            if alpha < 0:
                raise ValueError("alpha must be >= 0")
            object.__setattr__(self, "alpha", alpha)

    @property
    def size(self) -> int:
        return len(self.probs) if self.probs is not None else self.items

    @cached_property
    def _zipf_weights(self) -> tuple[Fraction, ...]:
        # Non-integral exponents take double-precision weights, then exact
        # arithmetic on those rationals; integral exponents are fully exact.
        a = self.alpha
        if is_integral(a):
            e = int(a)
            return tuple(Fraction(1, j**e) if e else Fraction(1) for j in range(1, self.items + 1))
        af = float(a)
        return tuple(Fraction(math.pow(j, -af)) for j in range(1, self.items + 1))

    @cached_property
    def _zipf_total(self) -> Fraction:
        if is_integral(self.alpha):
            return power_partial_sum(self.items, self.alpha)
        return sum(self._zipf_weights, Fraction(0))

    def probability(self, rank: int) -> Fraction:
        """Exact probability of the item at 1-based rank."""
        if not 1 <= rank <= self.size:
            raise ValueError(f"rank must lie in [1, {self.size}]")
        if self.probs is not None:
            return self.probs[rank - 1]
        return self._zipf_weights[rank - 1] / self._zipf_total

    def top_mass(self, k: int) -> Fraction:
        """Exact probability mass of the k highest-ranked items."""
        if not 0 <= k <= self.size:
            raise ValueError(f"k must lie in [0, {self.size}]")
        if self.probs is not None:
            return sum(self.probs[:k], Fraction(0))
        if is_integral(self.alpha):
            return power_partial_sum(k, self.alpha) / self._zipf_total if k else Fraction(0)
        return sum(self._zipf_weights[:k], Fraction(0)) / self._zipf_total

    @cached_property
    def float_probabilities(self) -> np.ndarray:
        if self.probs is not None:
            arr = np.array([float(p) for p in self.probs])
        else:
            ranks = np.arange(1, self.items + 1, dtype=np.float64)
            arr = ranks ** -float(self.alpha)
        return arr / arr.sum()


@dataclass(frozen=True)
class CostModel:
    """Per-request costs: recompute on miss, lookup on hit, optional storage."""

    compute: Fraction
    lookup: Fraction
    storage: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "compute", as_fraction(self.compute))
        object.__setattr__(self, "lookup", as_fraction(self.lookup))
        object.__setattr__(self, "storage", as_fraction(self.storage))
        if not self.compute > self.lookup >= 0:
            raise ValueError("costs must satisfy compute > lookup >= 0")
        if self.storage < 0:
            raise ValueError("storage cost must be >= 0")

    @property
    def rho(self) -> Fraction:
        return self.compute - self.lookup

    def mean_cost(self, hit_rate) -> Fraction:
        """Expected per-request cost at the given hit rate."""
        return self.compute - as_fraction(hit_rate) * self.rho


def boundary_gap(spec: WorkloadSpec, capacity: int) -> Fraction:
    """Exact probability gap across the capacity boundary, p_K - p_{K+1}."""
    if not 1 <= capacity < spec.size:
        raise ValueError("capacity must lie in [1, size)")
    return spec.probability(capacity) - spec.probability(capacity + 1)


def t_rank(spec: WorkloadSpec, capacity: int, delta) -> float:
    """Steps after which empirical counts misrank the boundary with
    probability at most delta; infinite when the gap is zero."""
    delta = float(delta)
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    gap = float(boundary_gap(spec, capacity))
    if gap == 0:
        return math.inf
    k, m = capacity, spec.size
    return (2.0 / (gap * gap)) * math.log(k * (m - k) / delta)


class TZero(NamedTuple):
    value: float
    branch: str
    rank_term: float
    swap_term: float


def t_zero(spec: WorkloadSpec, capacity: int, delta) -> TZero:
    """Transient horizon: the sooner of rank stabilization and the coupon
    bound capacity / (2 p_K)."""
    rank_term = t_rank(spec, capacity, delta)
    swap_term = capacity / (2.0 * float(spec.probability(capacity)))
    if rank_term <= swap_term:
        return TZero(rank_term, "rank", rank_term, swap_term)
    return TZero(swap_term, "swap", rank_term, swap_term)


def expected_swap_time(spec: WorkloadSpec, capacity: int) -> Fraction:
    """Surrogate for the expected time to request every top-K item:
    sum of 1 / p_j over the top K ranks (an upper-bound-flavored proxy;
    see swap_time_oracle for the exact mean)."""
    if not 1 <= capacity <= spec.size:
        raise ValueError("capacity must lie in [1, size]")
    return sum((1 / spec.probability(j) for j in range(1, capacity + 1)), Fraction(0))


def _top_probs(spec: WorkloadSpec, capacity: int) -> list[Fraction]:
    if not 1 <= capacity <= spec.size:
        raise ValueError("capacity must lie in [1, size]")
    if capacity > 20:
        raise PltError("exact swap-time oracles are limited to capacity <= 20")
    return [spec.probability(j) for j in range(1, capacity + 1)]


def swap_time_oracle(spec: WorkloadSpec, capacity: int) -> Fraction:
    """Exact expected first time every top-K item has been requested,
    by inclusion-exclusion over rank subsets."""
    probs = _top_probs(spec, capacity)
    total = Fraction(0)
    for size in range(1, capacity + 1):
        sign = 1 if size % 2 else -1
        for subset in combinations(probs, size):
            total += sign / sum(subset, Fraction(0))
    return total


def swap_time_markov(spec: WorkloadSpec, capacity: int) -> Fraction:
    """Same expectation via backward recursion over seen-subsets; an
    independent route kept for cross-checking the closed form."""
    probs = _top_probs(spec, capacity)
    full = (1 << capacity) - 1
    expect = [Fraction(0)] * (full + 1)
    states = sorted(range(full), key=lambda s: -bin(s).count("1"))
    for state in states:
        out_mass = Fraction(0)
        acc = Fraction(1)
        for j in range(capacity):
            if not state >> j & 1:
                out_mass += probs[j]
                acc += probs[j] * expect[state | 1 << j]
        expect[state] = acc / out_mass
    return expect[0]


def swap_time_exceedance(spec: WorkloadSpec, capacity: int, steps: int) -> Fraction:
    """Exact P(some top-K item is still unseen after the given steps)."""
    if steps < 0:
        raise ValueError("steps must be >= 0")
    probs = _top_probs(spec, capacity)
    total = Fraction(0)
    for size in range(1, capacity + 1):
        sign = 1 if size % 2 else -1
        for subset in combinations(probs, size):
            total += sign * (1 - sum(subset, Fraction(0))) ** steps
    return total


def bayesian_estimate(count, total, prior, capacity: int, beta):
    """Shrunk probability estimate (count + beta * prior * capacity) /
    (total + beta * capacity); exact when fed rationals."""
    if capacity < 1:
        raise ValueError("capacity must be >= 1")
    return (count + beta * prior * capacity) / (total + beta * capacity)


def retention_value(p_hat, cost: CostModel):
    """Expected saving per step from keeping an item cached."""
    return p_hat * cost.compute - cost.storage


def break_even(covered_size: int, cost: CostModel, p_star) -> float:
    """Requests needed before cache savings repay the covered-store build."""
    if covered_size <= 0:
        raise ValueError("covered_size must be positive")
    p_star = float(p_star)
    if not 0 < p_star <= 1:
        raise ValueError("p_star must lie in (0, 1]")
    return covered_size * float(cost.compute) / (p_star * float(cost.rho))


def zipf_coverage(capacity: int, items: int, alpha) -> float:
    """Fraction of power-law mass captured by the top-capacity items."""
    if not 1 <= capacity <= items:
        raise ValueError("capacity must lie in [1, items]")
    alpha = as_fraction(alpha)
    if is_integral(alpha):
        num_k, den_k = power_sum_pair(capacity, alpha)
        num_m, den_m = power_sum_pair(items, alpha)
        return pair_ratio(num_k, den_k, num_m, den_m)
    af = float(alpha)
    return power_sum_float(capacity, af) / power_sum_float(items, af)


def coverage_log_approx(capacity: int, items: int) -> float:
    """log K / log M shorthand for the unit-exponent coverage curve."""
    if not 2 <= capacity <= items:
        raise ValueError("requires 2 <= capacity <= items")
    return math.log(capacity) / math.log(items)


def selective_invalidation(updated_model, original_model, cached_prefixes, eta):
    """Split cached prefixes into (keep, recompute) by conditional KL drift.

    A prefix survives when the divergence of the updated conditional from
    the original stays within eta bits; lost absolute continuity forces a
    recompute.
    """
    eta = float(eta)
    if eta < 0:
        raise ValueError("eta must be >= 0")
    keep, recompute = [], []
    for prefix in cached_prefixes:
        prefix = tuple(prefix)
        try:
            drift = kl_at_prefix(updated_model, original_model, prefix)
        except AbsoluteContinuityError:
            recompute.append(prefix)
            continue
        (keep if drift <= eta else recompute).append(prefix)
    return keep, recompute


class CacheState:
    """Scalar reference automaton for one cache under one policy.

    Mirrors the vectorized engine exactly; used to cross-validate it and to
    document the admission semantics:

    * prior     - static top-K by prior, never changes.
    * lru       - admit every miss, evict the least recently requested.
    * lfu       - admit a miss only when its running request count strictly
                  exceeds the minimum resident count; the victim is the
                  minimum-count resident, oldest request first, then lowest
                  item id.
    * bayesian  - like lfu but ordered by the shrunk estimate
                  bayesian_estimate(count, total, prior, K, beta); starts
                  from the prior top-K.
    """

    def __init__(self, policy: str, capacity: int, probs, cost: CostModel, beta=1.0):
        if policy not in POLICIES:
            raise ValueError(f"unknown policy {policy!r}")
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.policy = policy
        self.capacity = capacity
        self.probs = [float(p) for p in probs]
        self.cost = cost
        self.beta = float(beta)
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        self.step = 0
        self.counts = [0] * len(self.probs)
        self.last = [0] * len(self.probs)
        preseed = policy in ("prior", "bayesian")
        self.resident = set(range(min(capacity, len(self.probs)))) if preseed else set()

    def _score(self, item: int) -> float:
        # Monotone transform of the bayesian estimate at fixed totals.
        return self.counts[item] + self.beta * self.probs[item] * self.capacity

    def _victim(self) -> int:
        if self.policy == "lru":
            return min(self.resident, key=lambda a: (self.last[a], a))
        if self.policy == "lfu":
            return min(self.resident, key=lambda a: (self.counts[a], self.last[a], a))
        return min(self.resident, key=lambda a: (self._score(a), self.last[a], a))

    def request(self, item: int) -> float:
        """Process one request; returns the cost incurred."""
        self.step += 1
        self.counts[item] += 1
        self.last[item] = self.step
        if item in self.resident:
            return float(self.cost.lookup)
        if self.policy != "prior":
            if len(self.resident) < self.capacity:
                self.resident.add(item)
            else:
                victim = self._victim()
                if self.policy == "lru":
                    admit = True
                elif self.policy == "lfu":
                    admit = self.counts[item] > self.counts[victim]
                else:
                    admit = self._score(item) > self._score(victim)
                if admit:
                    self.resident.discard(victim)
                    self.resident.add(item)
        return float(self.cost.compute)


@dataclass(frozen=True)
class SampleRow:
    """Aggregates at one sampled step for one policy.  mean_cost averages
    each replication's running per-request cost over steps 1..step;
    misrank_rate and p_swap_exceeds depend on the request stream only and
    repeat across policies."""

    policy: str
    step: int
    mean_cost: float
    se_cost: float
    hit_rate: float
    inst_hit_rate: float
    p_not_target: float
    misrank_rate: float
    p_swap_exceeds: float


@dataclass(frozen=True)
class CacheSimReport:
    spec: WorkloadSpec
    capacity: int
    cost: CostModel
    policies: tuple[str, ...]
    replications: int
    beta: float
    p_star: float
    analytic_prior_cost: float
    gap: float
    t_rank_marker: float
    t_zero_marker: float
    t_zero_branch: str
    swap_mean_observed: float
    swap_unfinished: float
    rows: tuple[SampleRow, ...] = field(repr=False)

    def summary_items(self) -> list[tuple[str, str]]:
        spec = self.spec
        items = [
            ("items", str(spec.size)),
            (
                "workload",
                f"zipf alpha={format_rational(spec.alpha)}" if spec.probs is None else "explicit",
            ),
            ("horizon", str(spec.horizon)),
            ("seed", str(spec.seed)),
            ("capacity", str(self.capacity)),
            ("replications", str(self.replications)),
            ("policies", " ".join(self.policies)),
            ("beta", _fmt(self.beta)),
            ("compute_cost", format_rational(self.cost.compute)),
            ("lookup_cost", format_rational(self.cost.lookup)),
            ("p_star", _fmt(self.p_star)),
            ("analytic_prior_cost", _fmt(self.analytic_prior_cost)),
            ("boundary_gap", _fmt(self.gap)),
            ("t_rank", _fmt(self.t_rank_marker)),
            ("t_zero", _fmt(self.t_zero_marker)),
            ("t_zero_branch", self.t_zero_branch),
            ("swap_mean_observed", _fmt(self.swap_mean_observed)),
            ("swap_unfinished", _fmt(self.swap_unfinished)),
        ]
        return items

    def to_csv(self) -> str:
        lines = [f"# {key} {value}" for key, value in self.summary_items()]
        lines.append(
            "policy,step,mean_cost,se_cost,hit_rate,inst_hit_rate,"
            "p_not_target,misrank_rate,p_swap_exceeds"
        )
        for row in self.rows:
            lines.append(
                ",".join(
                    (
                        row.policy,
                        str(row.step),
                        _fmt(row.mean_cost),
                        _fmt(row.se_cost),
                        _fmt(row.hit_rate),
                        _fmt(row.inst_hit_rate),
                        _fmt(row.p_not_target),
                        _fmt(row.misrank_rate),
                        _fmt(row.p_swap_exceeds),
                    )
                )
            )
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        lines = [f"{key:>22} {value}" for key, value in self.summary_items()]
        lines.append("")
        header = (
            f"{'policy':<10}{'step':>10}{'mean_cost':>14}{'se_cost':>12}"
            f"{'hit_rate':>12}{'inst_hit':>12}{'p_not_tgt':>12}"
            f"{'misrank':>12}{'p_swap>':>12}"
        )
        lines.append(header)
        for row in self.rows:
            lines.append(
                f"{row.policy:<10}{row.step:>10}{row.mean_cost:>14.6g}"
                f"{row.se_cost:>12.4g}{row.hit_rate:>12.6g}{row.inst_hit_rate:>12.6g}"
                f"{row.p_not_target:>12.6g}{row.misrank_rate:>12.6g}"
                f"{row.p_swap_exceeds:>12.6g}"
            )
        return "\n".join(lines) + "\n"

    def rows_for(self, policy: str) -> list[SampleRow]:
        return [row for row in self.rows if row.policy == policy]


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def default_sample_steps(horizon: int, markers=()) -> tuple[int, ...]:
    """Geometric grid 1, 2, 4, ... plus the half-horizon, the horizon, and
    any finite markers that fall inside it."""
    steps = set()
    t = 1
    while t <= horizon:
        steps.add(t)
        t *= 2
    steps.add(horizon)
    if horizon // 2 >= 1:
        steps.add(horizon // 2)
    for marker in markers:
        if math.isfinite(marker) and 1 <= marker <= horizon:
            steps.add(int(marker))
    return tuple(sorted(steps))


def _generate_requests(spec: WorkloadSpec, replications: int) -> np.ndarray:
    if replications * spec.horizon > _MAX_STREAM_CELLS:
        raise PltError("request stream too large; lower replications or horizon")
    cum = np.cumsum(spec.float_probabilities)
    cum[-1] = 1.0
    reqs = np.empty((replications, spec.horizon), dtype=np.int32)
    for r, child in enumerate(np.random.SeedSequence(spec.seed).spawn(replications)):
        gen = np.random.Generator(np.random.PCG64(child))
        reqs[r] = np.searchsorted(cum, gen.random(spec.horizon), side="right")
    return reqs


def _misrank_rates(
    reqs: np.ndarray, capacity: int, nitems: int, sample_steps
) -> dict[int, float]:
    """Per sampled step, the fraction of replications whose request counts
    fail to strictly rank every top-K item above every lower-ranked item."""
    nrep, _ = reqs.shape
    if capacity >= nitems:
        return {step: 0.0 for step in sample_steps}
    rows = np.arange(nrep)
    counts = np.zeros(nrep * nitems, dtype=np.int64)
    out = {}
    prev = 0
    for step in sample_steps:
        seg = reqs[:, prev:step]
        if seg.size:
            counts += np.bincount(
                (rows[:, None] * nitems + seg).ravel(), minlength=nrep * nitems
            )
        prev = step
        shaped = counts.reshape(nrep, nitems)
        lowest_top = shaped[:, :capacity].min(axis=1)
        highest_rest = shaped[:, capacity:].max(axis=1)
        out[step] = float((lowest_top <= highest_rest).mean())
    return out


def _swap_times(reqs: np.ndarray, capacity: int) -> np.ndarray:
    """Per replication, the 1-based step when every top-K item has appeared."""
    out = np.zeros(reqs.shape[0])
    for j in range(capacity):
        seen = reqs == j
        first = seen.argmax(axis=1) + 1.0
        first[~seen.any(axis=1)] = math.inf
        np.maximum(out, first, out=out)
    return out


def _run_policy(
    reqs: np.ndarray,
    policy: str,
    capacity: int,
    prior: np.ndarray,
    beta: float,
    sample_steps: tuple[int, ...],
) -> dict[str, np.ndarray]:
    """Vectorized replay of one policy over all replications.

    Returns per-sample-step snapshots: cumulative hits, instantaneous hit
    indicators, and whether the cache equals the true top-K set.
    """
    nrep, horizon = reqs.shape
    nitems = prior.shape[0]
    rows = np.arange(nrep)
    counts = np.zeros((nrep, nitems), dtype=np.int64)
    last = np.zeros((nrep, nitems), dtype=np.int64)
    in_cache = np.zeros((nrep, nitems), dtype=bool)
    slots = np.full((nrep, capacity), -1, dtype=np.int64)
    if policy in ("prior", "bayesian"):
        slots[:] = np.arange(capacity)
        in_cache[:, :capacity] = True
        filled = np.full(nrep, capacity)
    else:
        filled = np.zeros(nrep, dtype=np.int64)
    cum_hits = np.zeros(nrep, dtype=np.int64)
    prior_k = beta * capacity * prior
    sample_set = set(sample_steps)
    snap_hits, snap_inst, snap_target = [], [], []
    # Composed (count, last, id) keys must fit int64.
    assert (horizon + 1) * (horizon + 1) * (nitems + 1) < 1 << 62
    for t in range(1, horizon + 1):
        item = reqs[:, t - 1]
        counts[rows, item] += 1
        last[rows, item] = t
        hit = in_cache[rows, item]
        cum_hits += hit
        if policy != "prior":
            miss = np.flatnonzero(~hit)
            if miss.size:
                fill = miss[filled[miss] < capacity]
                full = miss[filled[miss] >= capacity]
                if fill.size:
                    it = item[fill]
                    slots[fill, filled[fill]] = it
                    in_cache[fill, it] = True
                    filled[fill] += 1
                if full.size:
                    it = item[full]
                    sl = slots[full]
                    sl_last = last[full[:, None], sl]
                    if policy == "lru":
                        victim = sl_last.argmin(axis=1)
                        admit = np.ones(full.size, dtype=bool)
                    elif policy == "lfu":
                        sl_counts = counts[full[:, None], sl]
                        key = (sl_counts * (horizon + 1) + sl_last) * (nitems + 1) + sl
                        victim = key.argmin(axis=1)
                        admit = counts[full, it] > sl_counts[np.arange(full.size), victim]
                    else:
                        sl_score = counts[full[:, None], sl] + prior_k[sl]
                        low = sl_score.min(axis=1, keepdims=True)
                        tie_key = sl_last * (nitems + 1) + sl
                        tie_key = np.where(sl_score == low, tie_key, np.iinfo(np.int64).max)
                        victim = tie_key.argmin(axis=1)
                        score_in = counts[full, it] + prior_k[it]
                        admit = score_in > sl_score[np.arange(full.size), victim]
                    doers = np.flatnonzero(admit)
                    if doers.size:
                        reps = full[doers]
                        vic = victim[doers]
                        old = slots[reps, vic]
                        in_cache[reps, old] = False
                        slots[reps, vic] = item[reps]
                        in_cache[reps, item[reps]] = True
        if t in sample_set:
            snap_hits.append(cum_hits.copy())
            snap_inst.append(hit.copy())
            snap_target.append(in_cache[:, :capacity].all(axis=1))
    return {
        "cum_hits": np.array(snap_hits),
        "inst_hit": np.array(snap_inst),
        "on_target": np.array(snap_target),
    }


def simulate(
    spec: WorkloadSpec,
    capacity: int,
    cost: CostModel,
    policies=POLICIES,
    replications: int = 100,
    beta: float = 1.0,
    sample_steps=None,
    delta=Fraction(1, 2),
) -> CacheSimReport:
    """Run the policies over common random request streams and aggregate.

    Deterministic given (spec, arguments): replication r always consumes the
    r-th spawned child stream of the spec seed regardless of policy subset.
    """
    if not 1 <= capacity <= spec.size:
        raise ValueError("capacity must lie in [1, size]")
    if replications < 2:
        raise ValueError("need at least 2 replications for standard errors")
    policies = tuple(policies)
    if not policies or len(set(policies)) != len(policies):
        raise ValueError("policies must be a nonempty list without repeats")
    for name in policies:
        if name not in POLICIES:
            raise ValueError(f"unknown policy {name!r}")
    beta = float(beta)
    if beta < 0:
        raise ValueError("beta must be >= 0")

    if capacity < spec.size:
        gap = float(boundary_gap(spec, capacity))
        rank_marker = t_rank(spec, capacity, delta)
        zero = t_zero(spec, capacity, delta)
        zero_marker, zero_branch = zero.value, zero.branch
    else:
        gap, rank_marker, zero_marker, zero_branch = 0.0, math.inf, math.inf, "swap"
    p_star = float(spec.top_mass(capacity))
    prior_cost = float(cost.compute) - p_star * float(cost.rho)

    if sample_steps is None:
        sample_steps = default_sample_steps(spec.horizon, (rank_marker, zero_marker))
    else:
        sample_steps = tuple(sorted(set(int(t) for t in sample_steps)))
        if not sample_steps or sample_steps[0] < 1 or sample_steps[-1] > spec.horizon:
            raise ValueError("sample steps must lie in [1, horizon]")

    reqs = _generate_requests(spec, replications)
    swap = _swap_times(reqs, capacity)
    finite = swap[np.isfinite(swap)]
    swap_mean = float(finite.mean()) if finite.size else math.inf
    swap_unfinished = float(np.isinf(swap).mean())
    misrank = _misrank_rates(reqs, capacity, spec.size, sample_steps)

    compute, rho = float(cost.compute), float(cost.rho)
    rows_out = []
    ordered = tuple(p for p in POLICIES if p in policies)
    for policy in ordered:
        snaps = _run_policy(
            reqs, policy, capacity, spec.float_probabilities, beta, sample_steps
        )
        for s, step in enumerate(sample_steps):
            hits = snaps["cum_hits"][s]
            per_rep_cost = compute - rho * (hits / step)
            mean_cost = float(per_rep_cost.mean())
            se_cost = float(per_rep_cost.std(ddof=1) / math.sqrt(replications))
            rows_out.append(
                SampleRow(
                    policy=policy,
                    step=step,
                    mean_cost=mean_cost,
                    se_cost=se_cost,
                    hit_rate=float((hits / step).mean()),
                    inst_hit_rate=float(snaps["inst_hit"][s].mean()),
                    p_not_target=float(1.0 - snaps["on_target"][s].mean()),
                    misrank_rate=misrank[step],
                    p_swap_exceeds=float((swap > step).mean()),
                )
            )
    return CacheSimReport(
        spec=spec,
        capacity=capacity,
        cost=cost,
        policies=ordered,
        replications=replications,
        beta=beta,
        p_star=p_star,
        analytic_prior_cost=prior_cost,
        gap=gap,
        t_rank_marker=rank_marker,
        t_zero_marker=zero_marker,
        t_zero_branch=zero_branch,
        swap_mean_observed=swap_mean,
        swap_unfinished=swap_unfinished,
        rows=tuple(rows_out),
    )
