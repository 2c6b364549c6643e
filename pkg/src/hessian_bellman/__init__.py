"""Degenerate m-Hessian Dirichlet problems through elliptic Bellman equations."""

__version__ = "0.1.0"
