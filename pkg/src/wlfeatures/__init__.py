"""Weisfeiler-Leman features for learning planning heuristics."""

__version__ = "0.1.0"
