"""Bundled delta-complete solver (interval constraint propagation)."""

from .search import Budget, SolveResult, solve

__all__ = ["Budget", "SolveResult", "solve"]
