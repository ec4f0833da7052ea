"""Large-N limit quantities.

Cumulative-arrival fractions ``x = 1 - exp(-lam t)`` are the natural
coordinate here: the pivotal likelihood ratio, the limit winner fractions and
the aggregation test are all simple in ``x``, and ``x`` stays bounded where
``t`` blows up (as k approaches ``k_hat``).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .model import ModelError, ModelParams, State


BOUNDARY_RTOL = 1e-12


class DomainError(ModelError, ValueError):
    pass


class Aggregation(str, enum.Enum):
    AGGREGATES = "Aggregates"
    FAILS_IN_H = "FailsInH"


def _time_from_fraction(params: ModelParams, x: float) -> float:
    return -math.log1p(-x) / params.lam


def _fraction_from_time(params: ModelParams, t: float) -> float:
    return -math.expm1(-params.lam * t)


def _belief_crossing_time(params: ModelParams, level: float) -> float:
    # solves Pr(good | H, t) = level in closed form
    rho = params.rho_H
    return math.log(rho * (1.0 - level) / (level * (1.0 - rho))) / params.lam


def myopic_cutoff(params: ModelParams) -> float:
    """Time at which a myopic agent sure of state H switches to S."""
    return _belief_crossing_time(params, params.s / params.g)


def k_hat(params: ModelParams) -> float:
    """Largest threshold for which the pivotal likelihood ratio can reach one."""
    a = math.log((1.0 - params.rho_L) / (1.0 - params.rho_H))
    b = math.log(params.rho_H / params.rho_L)
    return a / (a + b)


def interior_fraction(params: ModelParams, k: float) -> float:
    """Arrival fraction x_k at which the pivotal likelihood ratio equals one.

    Solves ``(rho_H/rho_L)**k * ((1 - rho_H x)/(1 - rho_L x))**(1 - k) == 1``.
    """
    if not 0.0 < k < k_hat(params):
        raise DomainError(f"interior branch needs 0 < k < k_hat={k_hat(params):.12g}, got {k}")
    # A - 1 via expm1 keeps precision as k -> 0
    log_a = k / (1.0 - k) * math.log(params.rho_H / params.rho_L)
    a_minus_1 = math.expm1(log_a)
    return a_minus_1 / (a_minus_1 * params.rho_H + (params.rho_H - params.rho_L))


def limit_cutoff_interior(params: ModelParams, k: float) -> float:
    return _time_from_fraction(params, interior_fraction(params, k))


def k_bar(params: ModelParams, xtol: float = 1e-12) -> float:
    """Threshold where the interior limit cut-off reaches the myopic one.

    Bisection on k over (0, k_hat); the interior fraction is increasing in k.
    """
    target = _fraction_from_time(params, myopic_cutoff(params))
    lo, hi = 0.0, k_hat(params)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        x = interior_fraction(params, mid)
        if x < target:
            lo = mid
        else:
            hi = mid
        if abs(x - target) <= xtol and hi - lo <= 1e-15:
            break
    return 0.5 * (lo + hi)


def limit_cutoff(params: ModelParams, k: float, kbar: float | None = None) -> float:
    """N -> infinity limit of the equilibrium cut-off for threshold k."""
    if not 0.0 < k <= 1.0:
        raise ValueError(f"k must lie in (0, 1], got {k}")
    if kbar is None:
        kbar = k_bar(params)
    if k < kbar:
        return limit_cutoff_interior(params, k)
    return myopic_cutoff(params)


def limit_branch(params: ModelParams, k: float, kbar: float | None = None) -> str:
    if kbar is None:
        kbar = k_bar(params)
    return "interior" if k < kbar else "myopic"


def aggregation_threshold(params: ModelParams) -> float:
    """k* = (rho_H g - s) / (g - s)."""
    g, s = params.g, params.s
    return (params.rho_H * g - s) / (g - s)


def winner_fraction_limit(params: ModelParams, state: State | str, k: float,
                          kbar: float | None = None) -> float:
    x = _fraction_from_time(params, limit_cutoff(params, k, kbar))
    return params.rho(state) * x


def classify_aggregation(params: ModelParams, k: float) -> Aggregation:
    if not 0.0 < k <= 1.0:
        raise ValueError(f"k must lie in (0, 1], got {k}")
    k_star = aggregation_threshold(params)
    # the boundary itself fails; absorb rounding in k_star (0.8*2 - 1 != 0.6)
    if k < k_star - BOUNDARY_RTOL * k_star:
        return Aggregation.AGGREGATES
    return Aggregation.FAILS_IN_H


def undominated_sincerity_level(params: ModelParams) -> float:
    g, s, r, lam = params.g, params.s, params.r, params.lam
    return r * s / ((r + lam) * g - lam * s)


def undominated_sincerity_cutoff(params: ModelParams) -> float:
    """Optimal stopping time of a forward-looking single agent sure of state H."""
    return _belief_crossing_time(params, undominated_sincerity_level(params))


def prob_no_winner(params: ModelParams, state: State | str, t: float, N: int) -> float:
    """Probability that none of N agents has a lump sum by t."""
    if t < 0 or N < 1:
        raise ValueError("need t >= 0 and N >= 1")
    x = _fraction_from_time(params, t)
    return math.exp(N * math.log1p(-params.rho(state) * x))


@dataclass(frozen=True)
class LimitPoint:
    k: float
    t_hat_k: float
    branch: str
    x_k: float
    frac_H: float
    frac_L: float


@dataclass(frozen=True)
class AsymptoticProfile:
    t_bar: float
    k_hat: float
    k_bar: float
    k_star: float
    t_tilde: float
    points: tuple[LimitPoint, ...] = field(default=())


def asymptotic_profile(params: ModelParams, ks=()) -> AsymptoticProfile:
    kbar = k_bar(params)
    points = []
    for k in ks:
        t = limit_cutoff(params, k, kbar)
        x = _fraction_from_time(params, t)
        points.append(LimitPoint(k=float(k), t_hat_k=t, branch=limit_branch(params, k, kbar),
                                 x_k=x, frac_H=params.rho_H * x, frac_L=params.rho_L * x))
    return AsymptoticProfile(
        t_bar=myopic_cutoff(params),
        k_hat=k_hat(params),
        k_bar=kbar,
        k_star=aggregation_threshold(params),
        t_tilde=undominated_sincerity_cutoff(params),
        points=tuple(points),
    )
