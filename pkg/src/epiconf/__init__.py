"""Confidence distributions, implied priors and epistemic-confidence checks."""

__version__ = "0.1.0"
