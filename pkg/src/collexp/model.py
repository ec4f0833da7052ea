"""Model primitives, assumption checks and Bayesian beliefs.

All state-odds computations happen in natural-log space: the odds of state H
given K sure winners among N agents raise likelihood ratios to powers of order
N, which overflows double precision long before N reaches the sizes used in
convergence studies.

Functions accept scalar or array ``t`` (numpy broadcasting); the count
arguments ``N`` and ``K`` are plain integers.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, asdict

import numpy as np

LOG_ODDS_CLAMP = 700.0


class State(str, enum.Enum):
    H = "H"
    L = "L"


class Violation(str, enum.Enum):
    PRIOR_OUT_OF_RANGE = "PriorOutOfRange"
    TYPE_PROB_ORDER = "TypeProbOrder"
    ASSUMPTION1_VIOLATED = "Assumption1Violated"
    ASSUMPTION2_VIOLATED = "Assumption2Violated"
    NONPOSITIVE_RATE = "NonpositiveRate"
    NONFINITE = "NonFinite"


class ModelError(Exception):
    """Base class for errors raised by this package."""


class ValidationError(ModelError, ValueError):
    """Raised when a parameter set breaks one or more standing assumptions.

    ``violations`` lists ``(Violation, message)`` pairs, one per failed check.
    """

    def __init__(self, violations: list[tuple[Violation, str]]):
        self.violations = list(violations)
        text = "; ".join(f"{v.value}: {msg}" for v, msg in self.violations)
        super().__init__(text)

    @property
    def codes(self) -> list[Violation]:
        return [v for v, _ in self.violations]


class DegenerateEvent(ModelError, ValueError):
    """Conditioning on K >= 1 sure winners at t = 0 (a probability-zero event)."""


@dataclass(frozen=True)
class ModelParams:
    q0: float
    rho_H: float
    rho_L: float
    lam: float
    r: float
    s: float
    z: float

    @property
    def g(self) -> float:
        """Expected flow payoff of R for a good type."""
        return self.lam * self.z

    def rho(self, state: State | str) -> float:
        return self.rho_H if State(state) is State.H else self.rho_L

    def to_dict(self) -> dict[str, float]:
        return asdict(self)

    @classmethod
    def canonical(cls) -> "ModelParams":
        """Reference parameter set used throughout the tests (g = 2)."""
        return cls(q0=0.6, rho_H=0.8, rho_L=0.2, lam=1.0, r=0.1, s=1.0, z=2.0)


@dataclass(frozen=True)
class QuorumRule:
    k: float
    N: int

    def __post_init__(self):
        if not (0.0 < self.k <= 1.0):
            raise ValueError(f"threshold k must lie in (0, 1], got {self.k}")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N}")
        object.__setattr__(self, "N", int(self.N))

    @property
    def M(self) -> int:
        """Integer vote threshold ceil(k N)."""
        return vote_threshold(self.k, self.N)


def vote_threshold(k: float, N: int) -> int:
    # absorb representation error, e.g. 0.7 * 100 == 70.00000000000001
    M = math.ceil(k * N - 1e-9)
    return min(max(M, 1), N)


@dataclass(frozen=True)
class BeliefPoint:
    t: float
    N: int
    K: int
    p_good_H: float
    p_good_L: float
    log_odds_H: float
    p_H: float
    p_good: float


def assumption_margins(params: ModelParams) -> dict[str, float]:
    """Slack in each strict inequality of the standing assumptions.

    Every margin must be strictly positive for a valid parameter set.
    """
    g = params.g
    mean_flow = (params.q0 * params.rho_H + (1 - params.q0) * params.rho_L) * g
    return {
        "rho_H*g - s": params.rho_H * g - params.s,
        "s - rho_L*g": params.s - params.rho_L * g,
        "rho_L*g": params.rho_L * g,
        "prior_flow - s": mean_flow - params.s,
    }


def validate_params(raw) -> ModelParams:
    """Return validated ``ModelParams`` built from ``raw``.

    ``raw`` may be a ``ModelParams`` or a mapping with the same field names.
    Every violated inequality is collected before raising ``ValidationError``.
    """
    if isinstance(raw, ModelParams):
        params = raw
    else:
        try:
            params = ModelParams(**{f: float(raw[f]) for f in
                                    ("q0", "rho_H", "rho_L", "lam", "r", "s", "z")})
        except KeyError as exc:
            raise ValidationError([(Violation.NONFINITE, f"missing field {exc}")]) from None

    fields = params.to_dict()
    bad = [name for name, v in fields.items() if not math.isfinite(v)]
    if bad:
        raise ValidationError([(Violation.NONFINITE, f"non-finite field(s): {', '.join(bad)}")])

    out: list[tuple[Violation, str]] = []
    if not 0.0 < params.q0 < 1.0:
        out.append((Violation.PRIOR_OUT_OF_RANGE, f"q0={params.q0} not in (0, 1)"))
    if not (0.0 < params.rho_L < params.rho_H < 1.0):
        out.append((Violation.TYPE_PROB_ORDER,
                    f"need 0 < rho_L < rho_H < 1, got rho_L={params.rho_L}, rho_H={params.rho_H}"))
    rates = {k: fields[k] for k in ("lam", "r", "s", "z") if fields[k] <= 0}
    if rates:
        out.append((Violation.NONPOSITIVE_RATE,
                    ", ".join(f"{k}={v} <= 0" for k, v in rates.items())))
    if out:
        # margins below are meaningless once primitives are out of range
        raise ValidationError(out)

    m = assumption_margins(params)
    a1 = [name for name in ("rho_H*g - s", "s - rho_L*g", "rho_L*g") if m[name] <= 0]
    if a1:
        out.append((Violation.ASSUMPTION1_VIOLATED,
                    "rho_H*g > s > rho_L*g > 0 fails at " + ", ".join(a1)))
    if m["prior_flow - s"] <= 0:
        out.append((Violation.ASSUMPTION2_VIOLATED,
                    f"q0*rho_H*g + (1-q0)*rho_L*g = {m['prior_flow - s'] + params.s:.12g} <= s = {params.s:.12g}"))
    if out:
        raise ValidationError(out)
    return params


def arrival_fraction(params: ModelParams, t):
    """Probability 1 - exp(-lam t) that a good type has had a lump sum by t."""
    return -np.expm1(-params.lam * np.asarray(t, dtype=float))


def p_good_given_state(params: ModelParams, state: State | str, t):
    """Unsure voter's belief that her type is good, given the state, at time t."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    rho = params.rho(state)
    decay = np.exp(-params.lam * t)
    out = rho * decay / (rho * decay + 1.0 - rho)
    return out[()] if out.ndim == 0 else out


def log_posterior_odds(params: ModelParams, N: int, K: int, t):
    """Natural-log odds of state H given K sure winners among N agents at t."""
    t = np.asarray(t, dtype=float)
    if not 0 <= K <= N:
        raise ValueError(f"need 0 <= K <= N, got K={K}, N={N}")
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    if K >= 1 and np.any(t == 0):
        raise DegenerateEvent(f"{K} sure winner(s) at t=0 has probability zero")
    x = arrival_fraction(params, t)
    out = (math.log(params.q0) - math.log1p(-params.q0)
           + K * (math.log(params.rho_H) - math.log(params.rho_L))
           + (N - K) * (np.log1p(-params.rho_H * x) - np.log1p(-params.rho_L * x)))
    return out[()] if np.ndim(out) == 0 else out


def _logistic(log_odds):
    lo = np.clip(log_odds, -LOG_ODDS_CLAMP, LOG_ODDS_CLAMP)
    return 1.0 / (1.0 + np.exp(-lo))


def p_state_H(params: ModelParams, N: int, K: int, t):
    """Posterior probability of state H given K sure winners at t."""
    out = _logistic(log_posterior_odds(params, N, K, t))
    return out[()] if np.ndim(out) == 0 else out


def p_good_given_winners(params: ModelParams, N: int, K: int, t):
    """Unsure voter's type belief given K sure winners at t (mixture over states)."""
    pH = p_state_H(params, N, K, t)
    gL = p_good_given_state(params, State.L, t)
    # written as gL + pH * (gH - gL) so rounding keeps it monotone in pH
    out = gL + pH * (p_good_given_state(params, State.H, t) - gL)
    return out[()] if np.ndim(out) == 0 else out


def belief_point(params: ModelParams, N: int, K: int, t: float) -> BeliefPoint:
    lo = float(log_posterior_odds(params, N, K, t))
    pH = float(_logistic(lo))
    gH = float(p_good_given_state(params, State.H, t))
    gL = float(p_good_given_state(params, State.L, t))
    return BeliefPoint(t=float(t), N=N, K=K, p_good_H=gH, p_good_L=gL,
                       log_odds_H=lo, p_H=pH, p_good=gL + pH * (gH - gL))
