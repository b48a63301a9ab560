"""Surrogate-assisted multi-objective evolutionary architecture search with a
pairwise-comparison surrogate and a main/vice population scheme."""

__version__ = "0.1.0"
