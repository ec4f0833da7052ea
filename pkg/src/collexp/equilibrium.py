"""Finite-N equilibrium cut-off.

An unsure voter who is pivotal at the cut-off (exactly M - 1 sure winners) is
indifferent between R and S. ``indifference_rhs`` is the value of R at that
instant expressed as a flow; the cut-off solves ``indifference_rhs(t) == s``.
Under the standing assumptions the right-hand side starts above ``s``, decays
to zero and is strictly decreasing wherever it is positive, so the root is
unique and plain bisection finds it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ModelError, ModelParams, QuorumRule, p_good_given_winners

MAX_ITER = 200
DEFAULT_TOL = 1e-10


class NoInteriorEquilibrium(ModelError):
    pass


class NonConvergence(ModelError):
    pass


@dataclass(frozen=True)
class CutoffSolution:
    t_hat: float
    residual: float
    bracket_lo: float
    bracket_hi: float
    iterations: int
    pivotal_belief: float


def indifference_rhs(params: ModelParams, rule: QuorumRule, t):
    """Pivotal unsure voter's flow value of R at time ``t > 0``.

    Uses M - 1 pivotal sure winners and N - M other unsure voters whose lump
    sum would lock in R.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("indifference_rhs needs t > 0")
    N, M = rule.N, rule.M
    g, s, r = params.g, params.s, params.r
    p_piv = p_good_given_winners(params, N, M - 1, t)
    p_next = p_good_given_winners(params, N, M, t)
    out = p_piv * params.lam * (params.z + (g - s) / r + (N - M) * (p_next * g - s) / r)
    return out[()] if np.ndim(out) == 0 else out


def solve_cutoff(params: ModelParams, rule: QuorumRule, tol: float = DEFAULT_TOL) -> CutoffSolution:
    """Bisect ``indifference_rhs(t) - s`` for the unique equilibrium cut-off.

    The upper bracket starts at 1/lam and doubles until the right-hand side
    falls below ``s``. Bisection stops once the bracket is narrower than
    ``tol * max(t_hat, 1/lam)`` and the residual is within ``tol * s``, or when
    the bracket cannot be split any further in double precision.
    """
    if not 0 < tol <= 1e-3:
        raise ValueError(f"tol must lie in (0, 1e-3], got {tol}")
    s = params.s
    scale = 1.0 / params.lam

    def excess(t: float) -> float:
        return float(indifference_rhs(params, rule, t)) - s

    eps = 1e-12 * scale
    if excess(eps) <= 0:
        raise NoInteriorEquilibrium(
            f"indifference value at t={eps:.3g} does not exceed s for k={rule.k}, N={rule.N}")

    lo, hi = eps, scale
    iterations = 0
    while excess(hi) >= 0:
        lo, hi = hi, 2.0 * hi
        iterations += 1
        if iterations >= MAX_ITER:
            raise NonConvergence(f"no upper bracket found below t={hi:.3g}")

    best_t, best_res = hi, excess(hi)
    while iterations < MAX_ITER:
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break  # bracket exhausted at double resolution
        res = excess(mid)
        iterations += 1
        if abs(res) < abs(best_res) or (abs(res) == abs(best_res) and mid < best_t):
            best_t, best_res = mid, res
        if res > 0:
            lo = mid
        elif res < 0:
            hi = mid
        else:
            lo = hi = mid
            break
        if hi - lo <= tol * max(best_t, scale) and abs(best_res) <= tol * s:
            break
    else:
        raise NonConvergence(f"bisection did not converge in {MAX_ITER} iterations")

    lo_res = excess(lo) if lo > eps else None
    if lo_res is not None and abs(lo_res) < abs(best_res):
        best_t, best_res = lo, lo_res

    return CutoffSolution(
        t_hat=best_t,
        residual=best_res,
        bracket_lo=lo,
        bracket_hi=hi,
        iterations=iterations,
        pivotal_belief=float(p_good_given_winners(params, rule.N, rule.M - 1, best_t)),
    )
