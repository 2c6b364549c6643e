"""Grid solver for the Bellman form of the m-Hessian Dirichlet problem."""

from .grid import Disc, Grid, Square
from .howard import ConvergenceError, SolveReport, discrete_bellman_operator, policy_iteration
from .problem import ConfigError, GridProblem, build_problem
from .scheme import BellmanScheme

__all__ = [
    "BellmanScheme",
    "ConfigError",
    "ConvergenceError",
    "Disc",
    "Grid",
    "GridProblem",
    "SolveReport",
    "Square",
    "build_problem",
    "discrete_bellman_operator",
    "policy_iteration",
]
