"""Deterministic synthetic balance surrogate used by optimizer tests: a
logistic win probability driven by the time-to-kill gap and the economy
asymmetry, with Bernoulli game outcomes.

The constants are chosen so that near-balanced configurations form a small
fraction of the rule space (roughly one percent), which keeps the benchmark
discriminative: model-based search has to exploit the smooth logistic
structure to find them, while uniform sampling mostly misses.
"""

import math

import numpy as np

from civbalance.engine import compute_ttk
from civbalance.evaluator import EvalResult

A_TTK = -3.7
B_ECON = 1.8


def economy_asymmetry(config) -> float:
    """Per-turn scoring economy of Empire gathering minus Nomads kill income."""
    gather_value = config.empire_farmer_gather * (1.0 + config.score_per_resource)
    return gather_value - 0.5 * config.nomads_kill_gain


def empire_win_probability(config, a=A_TTK, b=B_ECON) -> float:
    ttk_n_to_e, ttk_e_to_n = compute_ttk(config)
    x = a * (ttk_e_to_n - ttk_n_to_e) + b * economy_asymmetry(config)
    return 1.0 / (1.0 + math.exp(-x))


def true_balance_loss(config) -> float:
    """Exact loss under the surrogate: the infinite-game limit of evaluation."""
    return 2.0 * abs(empire_win_probability(config) - 0.5)


def synthetic_evaluate(config, n_games: int, base_seed: int) -> EvalResult:
    p = empire_win_probability(config)
    wins = 0
    for i in range(n_games):
        if np.random.default_rng(base_seed + i).uniform() < p:
            wins += 1
    return EvalResult(n_games, wins, n_games - wins, 0)
