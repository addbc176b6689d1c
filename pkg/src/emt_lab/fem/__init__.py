"""Triangular P1/P2 finite elements for 2D linear elasticity with traction data."""

from emt_lab.fem.assembly import Phases
from emt_lab.fem.elements import Space, build_space
from emt_lab.fem.field import FemField, evaluate, evaluate_gradient
from emt_lab.fem.mesh import Mesh, generate_mesh
from emt_lab.fem.solver import ConstrainedSystem, neumann_field, solve_cell, solve_neumann

__all__ = [
    "ConstrainedSystem",
    "FemField",
    "Mesh",
    "Phases",
    "Space",
    "build_space",
    "evaluate",
    "evaluate_gradient",
    "generate_mesh",
    "neumann_field",
    "solve_cell",
    "solve_neumann",
]
