"""Inertial viscosity Tseng extragradient methods for pseudomonotone VIs."""

from .problems import Problem, example1_problem, example3_problem, generate_example2, minty_certificate
from .rng import make_rng
from .sets import Ball, Box, HalfSpace
from .solvers import AlgorithmKind, SolverConfig, StopReason, control_config, default_config, solve
from .space import HilbertSpace, euclidean, l2_grid

__all__ = [
    "AlgorithmKind", "Ball", "Box", "HalfSpace", "HilbertSpace", "Problem", "SolverConfig",
    "StopReason", "control_config", "euclidean", "example1_problem", "example3_problem",
    "generate_example2", "l2_grid", "make_rng", "minty_certificate", "default_config", "solve",
]
