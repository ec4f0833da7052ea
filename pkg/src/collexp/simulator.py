"""Seeded Monte Carlo of the voting game.

Random streams
--------------
Every draw comes from numpy's Philox4x64 counter-based generator. The 128-bit
key is ``seed + (stream << 64)`` with ``stream`` = 0 for worlds whose state is
sampled from the prior, 1 for worlds forced into state H and 2 for state L.
Replicate ``i`` of an N-agent world owns ``B = ceil((1 + 2N) / 4)`` counter
blocks starting at block ``i * B`` (each block yields four 64-bit words).
Within a replicate, word 0 drives the state, words ``1..N`` the agents' types
and words ``N+1..2N`` their first-arrival times. A word ``w`` becomes the
uniform ``((w >> 11) + 0.5) / 2**53`` in (0, 1); types are good when the
uniform falls below ``rho_state``, arrivals are ``-log(u) / lam``.

Because a replicate's numbers depend only on (seed, stream, N, replicate
index), results do not depend on batch size or on the number of workers.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .asymptotics import prob_no_winner
from .equilibrium import solve_cutoff
from .model import ModelError, ModelParams, QuorumRule, State

STREAM_SAMPLED = 0
STREAM_FORCED = {State.H: 1, State.L: 2}
WILSON_Z = 1.959963984540054
_BATCH_WORDS = 1 << 21


class InvalidT1(ModelError, ValueError):
    pass


class Outcome(str, enum.Enum):
    R_FOREVER = "R_forever"
    S_FOREVER = "S_forever"


@dataclass(frozen=True)
class WorldDraw:
    state: State
    types: np.ndarray  # bool, True for good
    first_arrival: np.ndarray  # +inf for bad types
    seed_record: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return len(self.types)


@dataclass(frozen=True)
class GameOutcome:
    state: State
    winners_at_cutoff: int
    implemented_after: Outcome
    aggregated_correctly: bool
    per_capita_payoff: float
    branch: str = "irreversible"


@dataclass(frozen=True)
class AggregationEstimate:
    k: float
    N: int
    cutoff_used: float
    replicates: int
    p_agg_H: float
    p_agg_L: float
    ci_H: tuple[float, float]
    ci_L: tuple[float, float]
    oracle_H: float
    oracle_L: float

    def oracle_within_ci(self) -> bool:
        return (self.ci_H[0] <= self.oracle_H <= self.ci_H[1]
                and self.ci_L[0] <= self.oracle_L <= self.ci_L[1])


def wilson_interval(successes: int, n: int, z: float = WILSON_Z) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise ValueError("n must be positive")
    p = successes / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    # the interval touches the boundary exactly when the count does
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == n else min(1.0, centre + half)
    return lo, hi


# -- random streams ---------------------------------------------------------

def _blocks_per_replicate(N: int) -> int:
    return (1 + 2 * N + 3) // 4


def _uniform_words(seed: int, stream: int, N: int, first: int, count: int) -> np.ndarray:
    """Uniforms in (0, 1), shape (count, 4 * blocks), for replicates [first, first + count)."""
    if not 0 <= seed < 2 ** 64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    blocks = _blocks_per_replicate(N)
    bitgen = np.random.Philox(key=seed + (stream << 64), counter=first * blocks)
    words = bitgen.random_raw(count * 4 * blocks).reshape(count, 4 * blocks)
    return ((words >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53


def _draw_batch(params: ModelParams, N: int, seed: int, state: State | None,
                first: int, count: int):
    """Vectorised worlds: (is_H, good, first_arrival) for a replicate range."""
    stream = STREAM_SAMPLED if state is None else STREAM_FORCED[State(state)]
    u = _uniform_words(seed, stream, N, first, count)
    if state is None:
        is_h = u[:, 0] < params.q0
    else:
        is_h = np.full(count, State(state) is State.H)
    rho = np.where(is_h, params.rho_H, params.rho_L)[:, None]
    good = u[:, 1:N + 1] < rho
    arrival = np.where(good, -np.log(u[:, N + 1:2 * N + 1]) / params.lam, np.inf)
    return is_h, good, arrival


def _batches(N: int, replicates: int):
    size = max(1, _BATCH_WORDS // (4 * _blocks_per_replicate(N)))
    return [(start, min(size, replicates - start)) for start in range(0, replicates, size)]


def _map_batches(fn, N: int, replicates: int, workers: int):
    jobs = _batches(N, replicates)
    if workers <= 1 or len(jobs) == 1:
        return [fn(*job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


def draw_world(params: ModelParams, N: int, seed: int, replicate: int = 0,
               state: State | str | None = None) -> WorldDraw:
    """Draw one world; the state is sampled from the prior unless forced."""
    if N < 1:
        raise ValueError("N must be at least 1")
    forced = None if state is None else State(state)
    is_h, good, arrival = _draw_batch(params, N, seed, forced, replicate, 1)
    return WorldDraw(
        state=State.H if is_h[0] else State.L,
        types=good[0],
        first_arrival=arrival[0],
        seed_record={"seed": seed, "stream": STREAM_SAMPLED if forced is None else STREAM_FORCED[forced],
                     "replicate": replicate},
    )


def winners_at(world: WorldDraw, t: float) -> int:
    if t < 0:
        raise ValueError("t must be non-negative")
    return int(np.count_nonzero(world.first_arrival <= t))


# -- payoffs and outcomes ---------------------------------------------------

def _per_capita_payoff(params: ModelParams, n_good, N: int, cutoff: float, r_forever):
    """Expected discounted payoff per agent given type counts and the outcome.

    Good types earn the expected flow g while R runs; bad types earn nothing
    from R. After the cut-off R keeps paying good types, S pays everybody s.
    """
    g, s, r = params.g, params.s, params.r
    tail = math.exp(-r * cutoff)
    frac_good = np.asarray(n_good, dtype=float) / N
    before = frac_good * g * (1.0 - tail) / r
    after = np.where(r_forever, frac_good * g / r * tail, s / r * tail)
    out = before + after
    return out[()] if out.ndim == 0 else out


def _outcome(params, rule, world: WorldDraw, cutoff: float, branch: str,
             r_forever: bool, winners: int) -> GameOutcome:
    implemented = Outcome.R_FOREVER if r_forever else Outcome.S_FOREVER
    return GameOutcome(
        state=world.state,
        winners_at_cutoff=winners,
        implemented_after=implemented,
        aggregated_correctly=(world.state is State.H) == r_forever,
        per_capita_payoff=float(_per_capita_payoff(params, int(world.types.sum()), rule.N,
                                                   cutoff, r_forever)),
        branch=branch,
    )


def run_irreversible(params: ModelParams, rule: QuorumRule, cutoff: float,
                     world: WorldDraw) -> GameOutcome:
    """R runs until the cut-off and then stays iff at least M sure winners exist."""
    if cutoff < 0:
        raise ValueError("cutoff must be non-negative")
    if world.N != rule.N:
        raise ValueError(f"world has {world.N} agents, rule expects {rule.N}")
    w = winners_at(world, cutoff)
    return _outcome(params, rule, world, cutoff, "irreversible", w >= rule.M, w)


def run_reversible_constructed(params: ModelParams, rule: QuorumRule, t1: float,
                               world: WorldDraw, cutoff: float | None = None) -> GameOutcome:
    """Constructed equilibrium with reversible S.

    Everyone votes R before ``t1`` and unsure voters vote S at ``t1``. With no
    sure winner at ``t1`` S is kept for good; otherwise play resumes and the
    irreversible rule applies at the equilibrium cut-off.
    """
    if cutoff is None:
        cutoff = solve_cutoff(params, rule).t_hat
    if not 0 < t1 < cutoff:
        raise InvalidT1(f"need 0 < t1 < cutoff={cutoff:.12g}, got t1={t1}")
    if world.N != rule.N:
        raise ValueError(f"world has {world.N} agents, rule expects {rule.N}")
    w1 = winners_at(world, t1)
    if w1 == 0:
        return _outcome(params, rule, world, t1, "no_winner_at_t1", False, 0)
    w = winners_at(world, cutoff)
    return _outcome(params, rule, world, cutoff, "resumed_to_cutoff", w >= rule.M, w)


def first_best_outcome(world: WorldDraw, params: ModelParams) -> Outcome:
    """Planner's choice knowing all types; ties go to R."""
    n_good = int(world.types.sum())
    return Outcome.R_FOREVER if n_good * params.g >= world.N * params.s else Outcome.S_FOREVER


# -- estimation -------------------------------------------------------------

def binomial_oracles(params: ModelParams, rule: QuorumRule, cutoff: float) -> tuple[float, float]:
    """Exact P(W_H >= M) and P(W_L < M) at the cut-off."""
    x = -math.expm1(-params.lam * cutoff)
    oracle_h = float(stats.binom.sf(rule.M - 1, rule.N, params.rho_H * x))
    oracle_l = float(stats.binom.cdf(rule.M - 1, rule.N, params.rho_L * x))
    return oracle_h, oracle_l


def _count_quorum(params, rule, cutoff, seed, state, workers, replicates) -> int:
    def job(first, count):
        _, _, arrival = _draw_batch(params, rule.N, seed, state, first, count)
        winners = np.count_nonzero(arrival <= cutoff, axis=1)
        return int(np.count_nonzero(winners >= rule.M))
    return sum(_map_batches(job, rule.N, replicates, workers))


def estimate_aggregation(params: ModelParams, rule: QuorumRule, cutoff: float,
                         replicates: int, seed: int, workers: int = 1) -> AggregationEstimate:
    """Stratified estimate of R prevailing in H and S prevailing in L."""
    if replicates < 1000:
        raise ValueError("estimate_aggregation needs at least 1000 replicates")
    hits_h = _count_quorum(params, rule, cutoff, seed, State.H, workers, replicates)
    hits_l = replicates - _count_quorum(params, rule, cutoff, seed, State.L, workers, replicates)
    oracle_h, oracle_l = binomial_oracles(params, rule, cutoff)
    return AggregationEstimate(
        k=rule.k, N=rule.N, cutoff_used=cutoff, replicates=replicates,
        p_agg_H=hits_h / replicates, p_agg_L=hits_l / replicates,
        ci_H=wilson_interval(hits_h, replicates), ci_L=wilson_interval(hits_l, replicates),
        oracle_H=oracle_h, oracle_L=oracle_l,
    )


@dataclass(frozen=True)
class ConvergenceRow:
    N: int
    t_hat: float
    gap: float
    estimate: AggregationEstimate


def convergence_study(params: ModelParams, k: float, N_list, replicates: int, seed: int,
                      workers: int = 1) -> list[ConvergenceRow]:
    from .asymptotics import limit_cutoff

    N_list = list(N_list)
    if any(b <= a for a, b in zip(N_list, N_list[1:])):
        raise ValueError("N_list must be strictly increasing")
    t_limit = limit_cutoff(params, k)
    rows = []
    for N in N_list:
        rule = QuorumRule(k, N)
        t_hat = solve_cutoff(params, rule).t_hat
        est = estimate_aggregation(params, rule, t_hat, replicates, seed, workers)
        rows.append(ConvergenceRow(N=N, t_hat=t_hat, gap=abs(t_hat - t_limit), estimate=est))
    return rows


@dataclass(frozen=True)
class ReversibleEstimate:
    k: float
    N: int
    t1: float
    cutoff: float
    replicates: int
    p_S_H: float
    p_S_L: float
    ci_H: tuple[float, float]
    ci_L: tuple[float, float]
    lower_bound_H: float
    oracle_H: float
    oracle_L: float


def reversible_s_probability(params: ModelParams, rule: QuorumRule, state: State | str,
                             t1: float, cutoff: float) -> float:
    """Exact probability that S is kept forever in the constructed equilibrium.

    S prevails if nobody wins by ``t1``, or if somebody does but fewer than M
    have won by the cut-off. Agents fall independently into three bins
    (won by t1, won in (t1, cutoff], neither), which gives the joint term.
    """
    rho, lam, N, M = params.rho(state), params.lam, rule.N, rule.M
    p1 = rho * -math.expm1(-lam * t1)
    pc = rho * -math.expm1(-lam * cutoff)
    none_by_t1 = math.exp(N * math.log1p(-p1))
    below_quorum = float(stats.binom.cdf(M - 1, N, pc))
    # P(no winner by t1 and < M by cutoff)
    late = (pc - p1) / (1.0 - p1)
    joint = none_by_t1 * float(stats.binom.cdf(M - 1, N, late))
    return none_by_t1 + below_quorum - joint


def estimate_reversible(params: ModelParams, rule: QuorumRule, t1: float, replicates: int,
                        seed: int, cutoff: float | None = None,
                        workers: int = 1) -> ReversibleEstimate:
    """Monte Carlo of P(S forever | state) under the constructed reversible equilibrium."""
    if cutoff is None:
        cutoff = solve_cutoff(params, rule).t_hat
    if not 0 < t1 < cutoff:
        raise InvalidT1(f"need 0 < t1 < cutoff={cutoff:.12g}, got t1={t1}")

    def count(state):
        def job(first, n):
            _, _, arrival = _draw_batch(params, rule.N, seed, state, first, n)
            w1 = np.count_nonzero(arrival <= t1, axis=1)
            wc = np.count_nonzero(arrival <= cutoff, axis=1)
            return int(np.count_nonzero((w1 == 0) | (wc < rule.M)))
        return sum(_map_batches(job, rule.N, replicates, workers))

    s_h, s_l = count(State.H), count(State.L)
    return ReversibleEstimate(
        k=rule.k, N=rule.N, t1=t1, cutoff=cutoff, replicates=replicates,
        p_S_H=s_h / replicates, p_S_L=s_l / replicates,
        ci_H=wilson_interval(s_h, replicates), ci_L=wilson_interval(s_l, replicates),
        lower_bound_H=prob_no_winner(params, State.H, t1, rule.N),
        oracle_H=reversible_s_probability(params, rule, State.H, t1, cutoff),
        oracle_L=reversible_s_probability(params, rule, State.L, t1, cutoff),
    )


@dataclass(frozen=True)
class WelfareEstimate:
    k: float
    N: int
    cutoff: float
    replicates: int
    share_H: float
    mean_payoff: float
    payoff_se: float
    first_best_match: float
    first_best_payoff: float


def estimate_welfare(params: ModelParams, rule: QuorumRule, cutoff: float, replicates: int,
                     seed: int, workers: int = 1) -> WelfareEstimate:
    """Prior-sampled worlds: equilibrium payoff and agreement with the planner."""
    def job(first, n):
        is_h, good, arrival = _draw_batch(params, rule.N, seed, None, first, n)
        n_good = good.sum(axis=1)
        r_forever = np.count_nonzero(arrival <= cutoff, axis=1) >= rule.M
        pay = _per_capita_payoff(params, n_good, rule.N, cutoff, r_forever)
        fb_r = n_good * params.g >= rule.N * params.s
        # planner picks the better of R and S from t = 0
        fb_pay = np.where(fb_r, n_good / rule.N * params.g, params.s) / params.r
        return (int(is_h.sum()), float(pay.sum()), float((pay ** 2).sum()),
                int(np.count_nonzero(fb_r == r_forever)), float(fb_pay.sum()))

    parts = _map_batches(job, rule.N, replicates, workers)
    n_h = sum(p[0] for p in parts)
    total = sum(p[1] for p in parts)
    total_sq = sum(p[2] for p in parts)
    mean = total / replicates
    var = max(0.0, total_sq / replicates - mean * mean)
    return WelfareEstimate(
        k=rule.k, N=rule.N, cutoff=cutoff, replicates=replicates,
        share_H=n_h / replicates,
        mean_payoff=mean,
        payoff_se=math.sqrt(var / replicates),
        first_best_match=sum(p[3] for p in parts) / replicates,
        first_best_payoff=sum(p[4] for p in parts) / replicates,
    )
