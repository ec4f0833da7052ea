import math

import numpy as np
import pytest

from collexp.model import ModelParams, validate_params

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def canonical():
    return ModelParams.canonical()


def t_for_fraction(x, lam=1.0):
    """Time at which the cumulative arrival fraction 1 - exp(-lam t) equals x."""
    return -math.log1p(-x) / lam


def random_valid_params(rng: np.random.Generator) -> ModelParams:
    """Valid parameter set with every assumption holding with some slack."""
    while True:
        rho_L = rng.uniform(0.05, 0.85)
        rho_H = rng.uniform(rho_L + 0.05, 0.95)
        s = rng.uniform(0.5, 2.0)
        lo, hi = s / rho_H, s / rho_L
        g = rng.uniform(lo + 0.05 * (hi - lo), hi - 0.05 * (hi - lo))
        q_min = (s / g - rho_L) / (rho_H - rho_L)
        if q_min >= 0.95:
            continue
        q0 = rng.uniform(max(q_min, 0.0) + 0.02 * (1 - q_min), 0.98)
        lam = float(np.exp(rng.uniform(np.log(0.2), np.log(5.0))))
        r = float(np.exp(rng.uniform(np.log(0.02), np.log(2.0))))
        return validate_params(ModelParams(q0, rho_H, rho_L, lam, r, s, g / lam))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
