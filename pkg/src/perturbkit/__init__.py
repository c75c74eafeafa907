"""Deterministic corpus perturbation and targeted word-meaning evaluation.

Subpackages cover corpus I/O, PoS tagging and NP chunking, frequency
statistics, the four training-data perturbations, evaluation-set
construction, an embedded Kneser-Ney n-gram language model, and scoring
with a logistic interaction analysis.
"""

__version__ = "0.1.0"
