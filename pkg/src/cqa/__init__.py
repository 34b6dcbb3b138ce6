"""Constrained quantum annealing of graph coloring in the one-hot subspace."""

from .dynamics import Schedule, evolve
from .graph import Graph, coloring_oracle, fig5b_style_graph, parse_edge_list, random_regular, write_edge_list
from .hilbert import DriverSpec, build_problem_diagonal
from .metrics import AnnealOutcome, residual_energy, success_probability
from .spectral import gap_curve, ground_population, lowest_eigenpairs, population_distribution

__version__ = "0.1.0"

__all__ = [
    "AnnealOutcome",
    "DriverSpec",
    "Graph",
    "Schedule",
    "build_problem_diagonal",
    "coloring_oracle",
    "evolve",
    "fig5b_style_graph",
    "gap_curve",
    "ground_population",
    "lowest_eigenpairs",
    "parse_edge_list",
    "population_distribution",
    "random_regular",
    "residual_energy",
    "success_probability",
    "write_edge_list",
]
