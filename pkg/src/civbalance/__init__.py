"""Game-balancing toolkit: deterministic CivMini engine, self-play evaluation,
and Bayesian optimization over the rule space."""

__version__ = "0.1.0"
