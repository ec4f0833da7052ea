import math

import numpy as np
import pytest

import oracles
from collexp.asymptotics import (
    Aggregation,
    DomainError,
    aggregation_threshold,
    asymptotic_profile,
    classify_aggregation,
    interior_fraction,
    k_bar,
    k_hat,
    limit_branch,
    limit_cutoff,
    limit_cutoff_interior,
    myopic_cutoff,
    prob_no_winner,
    undominated_sincerity_cutoff,
    winner_fraction_limit,
)
from collexp.equilibrium import solve_cutoff
from collexp.model import ModelParams, QuorumRule

from conftest import random_valid_params, t_for_fraction


def with_(p, **kw):
    return ModelParams(**{**p.to_dict(), **kw})


def test_myopic_cutoff(canonical):
    t_bar = myopic_cutoff(canonical)
    assert t_bar == pytest.approx(math.log(4.0), abs=1e-14)
    assert t_bar == pytest.approx(oracles.myopic_cutoff(canonical), abs=1e-12)
    assert 0.8 * (1 - math.exp(-t_bar)) == pytest.approx(0.6, abs=1e-14)


def test_myopic_cutoff_near_indifference():
    p = ModelParams(q0=0.9, rho_H=0.51, rho_L=0.2, lam=1.0, r=0.1, s=1.0, z=1.0 / 0.51 * 1.0001)
    assert 0 < myopic_cutoff(p) < 1e-3


@pytest.mark.parametrize("rho_H, rho_L, expected", [
    (0.8, 0.2, 0.5),
    (0.9, 0.1, 0.5),
    (0.5, 0.25, math.log(1.5) / (math.log(2) + math.log(1.5))),
])
def test_k_hat(canonical, rho_H, rho_L, expected):
    assert k_hat(with_(canonical, rho_H=rho_H, rho_L=rho_L)) == pytest.approx(expected, abs=1e-14)


def test_k_hat_value():
    assert math.log(1.5) / (math.log(2) + math.log(1.5)) == pytest.approx(0.3691, abs=1e-4)


def test_interior_cutoff_quarter(canonical):
    a = 4 ** (1 / 3)
    assert a == pytest.approx(1.587401, abs=1e-6)
    x = interior_fraction(canonical, 0.25)
    assert x == pytest.approx(oracles.interior_fraction(canonical, 0.25), abs=1e-12)
    assert x == pytest.approx(0.549, abs=1e-3)
    assert limit_cutoff_interior(canonical, 0.25) == pytest.approx(0.796, abs=1e-3)


def test_interior_domain(canonical):
    with pytest.raises(DomainError):
        interior_fraction(canonical, 0.5)
    with pytest.raises(DomainError):
        limit_cutoff_interior(canonical, 0.7)


def test_interior_limits(canonical):
    assert limit_cutoff_interior(canonical, 1e-8) < 1e-6
    assert limit_cutoff_interior(canonical, 0.5 - 1e-9) > 15.0
    assert interior_fraction(canonical, 0.5 - 1e-12) < 1.0


def test_closed_form_fraction_satisfies_defining_equation(canonical):
    kh = k_hat(canonical)
    for k in np.arange(0.01, kh - 0.01 + 1e-12, 0.01):
        x = interior_fraction(canonical, float(k))
        assert abs(oracles.pivotal_log_ratio(canonical, k, x)) < 1e-12


def test_k_bar(canonical):
    kb = k_bar(canonical)
    la = math.log(2.125) / math.log(4.0)
    assert kb == pytest.approx(la / (1 + la), abs=1e-12)
    assert kb == pytest.approx(0.3523, abs=1e-4)
    assert kb < k_hat(canonical)
    assert limit_cutoff_interior(canonical, kb - 1e-6) < myopic_cutoff(canonical)
    assert limit_cutoff_interior(canonical, kb - 1e-6) < limit_cutoff_interior(canonical, kb - 1e-7)


def test_limit_cutoff_branches(canonical):
    assert limit_cutoff(canonical, 0.25) == pytest.approx(0.796, abs=1e-3)
    assert limit_cutoff(canonical, 0.7) == pytest.approx(math.log(4.0), abs=1e-14)
    kb = k_bar(canonical)
    assert limit_cutoff_interior(canonical, kb) == pytest.approx(myopic_cutoff(canonical), abs=1e-9)
    assert limit_cutoff(canonical, kb) == pytest.approx(myopic_cutoff(canonical), abs=1e-9)
    assert limit_branch(canonical, 0.2) == "interior"
    assert limit_branch(canonical, 0.6) == "myopic"


def test_limit_cutoff_shape(canonical):
    kb = k_bar(canonical)
    ks = np.arange(1e-3, 1.0 + 1e-12, 1e-3)
    ts = np.array([limit_cutoff(canonical, float(k), kb) for k in ks])
    assert np.all(np.diff(ts) >= -1e-9)
    below = ks < kb
    assert np.all(np.diff(ts[below]) > 0)
    assert np.allclose(ts[ks >= kb], math.log(4.0), atol=1e-9, rtol=0)


def test_aggregation_threshold(canonical):
    assert aggregation_threshold(canonical) == pytest.approx(0.6, abs=1e-15)
    t_bar = myopic_cutoff(canonical)
    assert aggregation_threshold(canonical) == pytest.approx(0.8 * (1 - math.exp(-t_bar)), abs=1e-14)
    assert aggregation_threshold(canonical) > k_bar(canonical)


@pytest.mark.parametrize("seed", range(3))
def test_threshold_below_rho_H(seed):
    rng = np.random.default_rng(seed)
    for _ in range(50):
        p = random_valid_params(rng)
        assert aggregation_threshold(p) < p.rho_H
        assert 0 < k_bar(p) < k_hat(p) < 1
        assert undominated_sincerity_cutoff(p) > myopic_cutoff(p) > 0
        assert k_bar(p) < aggregation_threshold(p)


def test_winner_fractions(canonical):
    for k in (0.36, 0.5, 0.8, 1.0):
        assert winner_fraction_limit(canonical, "H", k) == pytest.approx(0.6, abs=1e-14)
        assert winner_fraction_limit(canonical, "L", k) == pytest.approx(0.15, abs=1e-14)
    assert winner_fraction_limit(canonical, "H", 1e-9) < 1e-7
    assert winner_fraction_limit(canonical, "L", 1e-9) < 1e-7


@pytest.mark.parametrize("k, expected", [
    (0.3, Aggregation.AGGREGATES),
    (0.45, Aggregation.AGGREGATES),
    (0.6, Aggregation.FAILS_IN_H),
    (0.7, Aggregation.FAILS_IN_H),
    (1.0, Aggregation.FAILS_IN_H),
])
def test_classification(canonical, k, expected):
    assert classify_aggregation(canonical, k) is expected


def test_aggregation_inequalities(canonical):
    k_star = aggregation_threshold(canonical)
    kb = k_bar(canonical)
    for k in np.linspace(0.005, 0.995, 199):
        k = float(k)
        x = 1 - math.exp(-canonical.lam * limit_cutoff(canonical, k, kb))
        if k < k_star - 1e-9:
            assert canonical.rho_H * x > k > canonical.rho_L * x
        elif k > k_star + 1e-9:
            assert canonical.rho_H * x < k


def test_sincerity_cutoff(canonical):
    t_tilde = undominated_sincerity_cutoff(canonical)
    assert t_tilde == pytest.approx(math.log(44.0), abs=1e-13)
    assert t_tilde == pytest.approx(3.784, abs=1e-3)
    assert t_tilde == pytest.approx(oracles.sincerity_cutoff(canonical), abs=1e-12)
    assert t_tilde > myopic_cutoff(canonical)


def test_sincerity_cutoff_myopic_limit(canonical):
    far = undominated_sincerity_cutoff(with_(canonical, r=1e7))
    assert far == pytest.approx(myopic_cutoff(canonical), abs=1e-5)


def test_prob_no_winner(canonical):
    assert prob_no_winner(canonical, "H", 0.0, 17) == 1.0
    assert prob_no_winner(canonical, "H", t_for_fraction(0.75), 10) == pytest.approx(0.4 ** 10, rel=1e-12)
    assert 0.4 ** 10 == pytest.approx(1.048576e-4, rel=1e-12)


def test_unanimity_cannot_aggregate(canonical):
    # For every horizon, driving the H-state probability of no winner to 0
    # drives the L-state one to 0 as well.
    for N in (10, 100, 1000, 10_000, 100_000):
        ts = np.geomspace(1e-8, 10.0, 400)
        h = np.array([prob_no_winner(canonical, "H", float(t), N) for t in ts])
        l = np.array([prob_no_winner(canonical, "L", float(t), N) for t in ts])
        assert not np.any((h < 0.01) & (l > 0.99))
        # -log(1 - rho_H x) <= rho_H x / (1 - rho_H) and log(1 - rho_L x) <= -rho_L x
        # give l <= h ** power, so h -> 0 forces l -> 0
        power = canonical.rho_L * (1 - canonical.rho_H) / canonical.rho_H
        x = -np.expm1(-canonical.lam * ts)
        log_h = N * np.log1p(-canonical.rho_H * x)
        log_l = N * np.log1p(-canonical.rho_L * x)
        assert np.all(log_l <= power * log_h + 1e-12)


def test_profile(canonical):
    prof = asymptotic_profile(canonical, [0.25, 0.7])
    assert 0 < prof.k_bar < prof.k_hat < 1
    assert prof.t_tilde > prof.t_bar > 0
    assert prof.k_bar < prof.k_star
    for pt in prof.points:
        assert pt.frac_H == pytest.approx(canonical.rho_H * pt.x_k, rel=1e-15)
        assert pt.frac_L == pytest.approx(canonical.rho_L * pt.x_k, rel=1e-15)
    assert [pt.branch for pt in prof.points] == ["interior", "myopic"]


@pytest.mark.parametrize("k", [0.25, 0.7])
def test_finite_cutoffs_converge(canonical, k):
    limit = limit_cutoff(canonical, k)
    gaps = [abs(solve_cutoff(canonical, QuorumRule(k, N)).t_hat - limit) for N in (100, 1000, 10_000)]
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 0.01 * limit
