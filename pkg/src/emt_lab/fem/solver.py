"""Pure-traction solves with rigid motions removed by Lagrange multipliers.

The saddle system ``[[K, G], [Gᵀ, 0]]`` is factorized once per stiffness
matrix and reused for every right-hand side on the same mesh and phases.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Literal

import numpy as np
import structlog
from numpy.typing import ArrayLike
from scipy import sparse
from scipy.sparse.linalg import splu

from emt_lab.errors import IncompatibleTractionError, InvalidInputError, SolverError
from emt_lab.fem.assembly import (
    ConstantStrainTraction,
    ConstantTraction,
    Phases,
    Traction,
    VectorField,
    assemble_body_load,
    assemble_stiffness,
    assemble_traction,
    boundary_mass,
    compatibility_residuals,
    load_scale,
    point_load,
    rigid_modes,
    skew_functional,
)
from emt_lab.fem.elements import Space
from emt_lab.fem.field import FemField
from emt_lab.metrics import factorization_duration, factorizations_total, linear_solves_total
from emt_lab.telemetry import get_tracer
from emt_lab.tensor_core import FloatArray, RigidMotion, SymMat2, Tensor4

log = structlog.get_logger()
tracer = get_tracer(__name__)

COMPATIBILITY_TOL = 1e-10

TorqueCorrection = Literal["body_couple", "projected"]


class ConstrainedSystem:
    """LU factorization of the multiplier system for one stiffness matrix."""

    def __init__(self, space: Space, phases: Phases) -> None:
        self.space = space
        self.phases = phases
        self.modes = rigid_modes(space)
        with tracer.start_as_current_span("fem.factorize") as span:
            span.set_attribute("fem.dofs", space.n_dofs)
            start = time.monotonic()
            stiffness = assemble_stiffness(space, phases)
            g = sparse.csr_matrix(self.modes)
            saddle = sparse.bmat([[stiffness, g], [g.T, None]], format="csc")
            try:
                self._lu = splu(saddle)
            except RuntimeError as exc:
                msg = f"factorization failed: {exc}"
                raise SolverError(msg) from exc
            elapsed = time.monotonic() - start
        self.stiffness = stiffness
        factorizations_total.add(1)
        factorization_duration.record(elapsed)
        log.debug("system_factorized", dofs=space.n_dofs, seconds=round(elapsed, 3))

    def check_compatible(self, load: FloatArray) -> None:
        """Raise unless *load* carries no net force or torque."""
        residuals = compatibility_residuals(self.space, load)
        scale = max(load_scale(self.space, load), np.finfo(float).tiny)
        if np.any(np.abs(residuals) > COMPATIBILITY_TOL * scale):
            fx, fy, torque = (float(r) for r in residuals)
            msg = f"net force ({fx:.3e}, {fy:.3e}) and torque {torque:.3e} do not vanish"
            raise IncompatibleTractionError(msg, (fx, fy, torque))

    def solve(self, load: FloatArray, *, check: bool = True) -> FloatArray:
        """Displacement dofs for *load*, orthogonal to rigid motions in the dof inner product."""
        if check:
            self.check_compatible(load)
        with tracer.start_as_current_span("fem.solve"):
            rhs = np.concatenate([load, np.zeros(3)])
            sol = self._lu.solve(rhs)
        if not np.all(np.isfinite(sol)):
            msg = "linear solve produced non-finite values"
            raise SolverError(msg)
        linear_solves_total.add(1)
        multipliers = sol[self.space.n_dofs :]
        log.debug("linear_solve", multiplier_norm=float(np.linalg.norm(multipliers)))
        return sol[: self.space.n_dofs]


def normalize_rigid(space: Space, values: FloatArray) -> tuple[FloatArray, RigidMotion]:
    """Add the rigid motion that puts a field in H̃.

    The result has ``∫_Ω (∂₁u₂ − ∂₂u₁) = 0`` and ``∫_∂Ω u = 0``.
    """
    u = np.asarray(values, dtype=np.float64).reshape(-1)
    modes = rigid_modes(space)
    b = skew_functional(space)
    w = -float(b @ u) / float(b @ modes[:, 2])
    u = u + w * modes[:, 2]
    m = boundary_mass(space)
    nodal = u.reshape(-1, 2)
    c = -(m @ nodal) / m.sum()
    nodal = nodal + c
    return nodal, RigidMotion(w, (float(c[0]), float(c[1])))


def _field(system: ConstrainedSystem, load: FloatArray, *, check: bool = True) -> FemField:
    u = system.solve(load, check=check)
    nodal, _ = normalize_rigid(system.space, u)
    return FemField(system.space, nodal)


def solve_neumann(
    space: Space,
    phases: Phases,
    traction: Traction,
    body_load: VectorField | None = None,
    *,
    system: ConstrainedSystem | None = None,
    check: bool = True,
) -> FemField:
    """Solve ``−div C∇̂u = f`` in Ω, ``C∇̂u ν = ψ`` on ∂Ω, normalized in H̃.

    Pass ``check=False`` when the data balance only up to quadrature error;
    the multipliers then absorb the residual force and torque.

    Raises:
        IncompatibleTractionError: data does not balance force and torque.
    """
    system = system or ConstrainedSystem(space, phases)
    load = assemble_traction(space, traction)
    if body_load is not None:
        load = load + assemble_body_load(space, body_load)
    return _field(system, load, check=check)


def cell_strain(i: int, j: int) -> SymMat2:
    """``E^{ij} = sym(e_i ⊗ e_j)`` for 0-based ``i, j``."""
    if i not in (0, 1) or j not in (0, 1):
        msg = f"cell indices must be 0 or 1, got ({i}, {j})"
        raise InvalidInputError(msg)
    basis = np.eye(2)
    return SymMat2.outer_sym(basis[i], basis[j])


def solve_cell(
    space: Space,
    c0: Tensor4,
    c1: Tensor4,
    i: int,
    j: int,
    *,
    system: ConstrainedSystem | None = None,
) -> FemField:
    """Displacement of the inclusion problem driven by ``(C0 E^{ij}) ν``."""
    strain = cell_strain(i, j)
    system = system or ConstrainedSystem(space, Phases(c0, c1))
    return _field(system, assemble_traction(space, ConstantStrainTraction(c0, strain)))


@dataclass(frozen=True)
class NeumannLoad:
    """Load of the Neumann function with its balance before and after correction."""

    vector: FloatArray
    node: int
    net_force: tuple[float, float]
    torque_before: float
    torque_after: float


def neumann_load(
    space: Space,
    y: ArrayLike,
    k: int,
    torque_correction: TorqueCorrection = "projected",
) -> NeumannLoad:
    """Point force ``e_k`` at boundary node *y* balanced by ``−e_k/|∂Ω|``.

    The residual torque of the discrete load is removed either by projecting
    the load orthogonal to all rigid components (``projected``) or by a
    uniform body couple (``body_couple``), which pairs to zero with every
    H̃-normalized field.
    """
    if k not in (0, 1):
        msg = f"direction index must be 0 or 1, got {k}"
        raise InvalidInputError(msg)
    node = space.mesh.find_boundary_node(y)
    direction = np.eye(2)[k]
    perimeter = space.mesh.perimeter
    load = point_load(space, node, direction)
    load = load + assemble_traction(space, ConstantTraction(tuple(-direction / perimeter)))
    modes = rigid_modes(space)
    fx, fy, torque = (float(r) for r in modes.T @ load)
    match torque_correction:
        case "body_couple":
            b = skew_functional(space)
            load = load - torque / float(b @ modes[:, 2]) * b
        case "projected":
            coef = np.linalg.solve(modes.T @ modes, modes.T @ load)
            load = load - modes @ coef
        case _:
            msg = f"unknown torque correction {torque_correction!r}"
            raise InvalidInputError(msg)
    after = float(modes[:, 2] @ load)
    return NeumannLoad(load, node, (fx, fy), torque, after)


def neumann_field(
    space: Space,
    c0: Tensor4,
    y: ArrayLike,
    k: int,
    *,
    torque_correction: TorqueCorrection = "projected",
    system: ConstrainedSystem | None = None,
) -> FemField:
    """Column ``N(·, y) e_k`` of the background Neumann function, normalized in H̃.

    Raises:
        InvalidInputError: *y* is not a boundary node.
    """
    system = system or ConstrainedSystem(space, Phases.homogeneous(c0))
    nl = neumann_load(space, y, k, torque_correction)
    log.debug(
        "neumann_load",
        node=nl.node,
        k=k,
        torque_before=nl.torque_before,
        torque_after=nl.torque_after,
    )
    return _field(system, nl.vector)
