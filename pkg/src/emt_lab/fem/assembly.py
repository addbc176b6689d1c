"""Vectorized assembly of stiffness matrices, load vectors and rigid-motion functionals."""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass
from typing import Protocol

import numpy as np
from numpy.polynomial import polynomial as npoly
from numpy.typing import ArrayLike
from scipy import sparse

from emt_lab.errors import InvalidInputError
from emt_lab.fem.elements import Space, edge_shape_values, line_rule, shape_values, triangle_rule
from emt_lab.fem.mesh import BACKGROUND, INCLUSION
from emt_lab.tensor_core import SQRT2, FloatArray, SymMat2, Tensor4, contract

BODY_LOAD_DEGREE = 5

VectorField = Callable[[FloatArray], FloatArray]


@dataclass(frozen=True)
class Phases:
    """Piecewise-constant elasticity: one tensor per element tag."""

    background: Tensor4
    inclusion: Tensor4

    @classmethod
    def homogeneous(cls, c: Tensor4) -> Phases:
        return cls(c, c)

    @property
    def contrast(self) -> Tensor4:
        """``C1 − C0``."""
        return self.inclusion - self.background

    def by_tag(self) -> FloatArray:
        """``(2, 3, 3)`` Mandel matrices indexed by element tag."""
        out = np.empty((2, 3, 3))
        out[BACKGROUND] = self.background.mandel
        out[INCLUSION] = self.inclusion.mandel
        return out


# ---------------------------------------------------------------------------
# Tractions
# ---------------------------------------------------------------------------


class Traction(Protocol):
    """Boundary data ``ψ`` evaluated at points with their outward normals."""

    @property
    def degree(self) -> int: ...

    def evaluate(self, points: FloatArray, normals: FloatArray) -> FloatArray: ...


@dataclass(frozen=True)
class ConstantTraction:
    """``ψ ≡ v``."""

    vector: tuple[float, float]

    @property
    def degree(self) -> int:
        return 0

    def evaluate(self, points: FloatArray, normals: FloatArray) -> FloatArray:
        return np.broadcast_to(np.asarray(self.vector, dtype=np.float64), points.shape).copy()


@dataclass(frozen=True)
class ConstantStrainTraction:
    """``ψ = (C0 E) ν``: the traction of the uniform strain *strain* in the background."""

    background: Tensor4
    strain: SymMat2

    @property
    def degree(self) -> int:
        return 0

    def evaluate(self, points: FloatArray, normals: FloatArray) -> FloatArray:
        stress = contract(self.background, self.strain).to_matrix()
        return normals @ stress.T


@dataclass(frozen=True)
class PolynomialTraction:
    """Each component is ``Σ c[i][j] xⁱ yʲ``."""

    x_coeffs: tuple[tuple[float, ...], ...]
    y_coeffs: tuple[tuple[float, ...], ...]

    @classmethod
    def from_lists(cls, x: list[list[float]], y: list[list[float]]) -> PolynomialTraction:
        return cls(tuple(tuple(r) for r in x), tuple(tuple(r) for r in y))

    @staticmethod
    def _grid(coeffs: tuple[tuple[float, ...], ...]) -> FloatArray:
        if not coeffs:
            return np.zeros((1, 1))
        width = max(len(r) for r in coeffs)
        return np.array([list(r) + [0.0] * (width - len(r)) for r in coeffs], dtype=np.float64)

    @property
    def degree(self) -> int:
        deg = 0
        for grid in (self._grid(self.x_coeffs), self._grid(self.y_coeffs)):
            i, j = np.nonzero(grid)
            if i.size:
                deg = max(deg, int((i + j).max()))
        return deg

    def evaluate(self, points: FloatArray, normals: FloatArray) -> FloatArray:
        x, y = points[:, 0], points[:, 1]
        return np.stack(
            [
                npoly.polyval2d(x, y, self._grid(self.x_coeffs)),
                npoly.polyval2d(x, y, self._grid(self.y_coeffs)),
            ],
            axis=-1,
        )


@dataclass(frozen=True)
class StressTraction:
    """``ψ = σ(x) ν`` for a stress field given as a callable ``(m, 2) → (m, 2, 2)``."""

    stress: Callable[[FloatArray], FloatArray]
    stress_degree: int

    @property
    def degree(self) -> int:
        return self.stress_degree

    def evaluate(self, points: FloatArray, normals: FloatArray) -> FloatArray:
        return np.einsum("mij,mj->mi", self.stress(points), normals)


# ---------------------------------------------------------------------------
# Matrices
# ---------------------------------------------------------------------------


def strain_operator(grads: FloatArray) -> FloatArray:
    """Mandel strain operator ``(T, q, 3, 2·nb)`` from gradients ``(T, q, nb, 2)``."""
    t, q, nb, _ = grads.shape
    gx, gy = grads[..., 0], grads[..., 1]
    b = np.zeros((t, q, 3, nb, 2))
    b[:, :, 0, :, 0] = gx
    b[:, :, 1, :, 1] = gy
    b[:, :, 2, :, 0] = gy / SQRT2
    b[:, :, 2, :, 1] = gx / SQRT2
    return b.reshape(t, q, 3, 2 * nb)


def assemble_stiffness(space: Space, phases: Phases) -> sparse.csr_matrix:
    """Global stiffness ``K`` with ``uᵀ K v = ∫ C ∇̂u : ∇̂v``."""
    ref, w, grads = space.quadrature(max(1, 2 * (space.order - 1)))
    det, _ = space.geometry
    b = strain_operator(grads)
    c = phases.by_tag()[space.mesh.tags]
    weights = np.abs(det)[:, None] * w[None, :]
    ke = np.einsum("tqia,tij,tqjb,tq->tab", b, c, b, weights, optimize=True)
    dofs = space.cell_dofs
    n = dofs.shape[1]
    rows = np.broadcast_to(dofs[:, :, None], (dofs.shape[0], n, n))
    cols = np.broadcast_to(dofs[:, None, :], (dofs.shape[0], n, n))
    coo = sparse.coo_matrix(
        (ke.ravel(), (rows.ravel(), cols.ravel())), shape=(space.n_dofs, space.n_dofs)
    )
    return coo.tocsr()


def rigid_modes(space: Space) -> FloatArray:
    """``(n_dofs, 3)`` columns: x-translation, y-translation, rotation ``(−y, x)``."""
    g = np.zeros((space.n_dofs, 3))
    g[0::2, 0] = 1.0
    g[1::2, 1] = 1.0
    g[0::2, 2] = -space.nodes[:, 1]
    g[1::2, 2] = space.nodes[:, 0]
    return g


def skew_functional(space: Space) -> FloatArray:
    """Vector ``b`` with ``b·u = ∫_Ω (∂₁u₂ − ∂₂u₁)``.

    Also the nodal load of a unit uniform body couple.
    """
    _, w, grads = space.quadrature(max(0, space.order - 1))
    det, _ = space.geometry
    integrals = np.einsum("tqbk,q,t->tbk", grads, w, np.abs(det))
    out = np.zeros(space.n_dofs)
    np.add.at(out, 2 * space.cells, -integrals[..., 1])
    np.add.at(out, 2 * space.cells + 1, integrals[..., 0])
    return out


def _edge_quadrature(space: Space, degree: int) -> tuple[FloatArray, FloatArray, FloatArray]:
    n_points = math.ceil((degree + space.order + 1) / 2) + 1
    t, w = line_rule(n_points)
    return t, w, edge_shape_values(space.order, t)


def boundary_mass(space: Space) -> FloatArray:
    """``m_a = ∫_∂Ω φ_a`` per node."""
    _, w, phi = _edge_quadrature(space, 0)
    contrib = space.mesh.edge_lengths[:, None] * (w @ phi)[None, :]
    return np.bincount(
        space.boundary_cells.ravel(), weights=contrib.ravel(), minlength=space.n_nodes
    )


# ---------------------------------------------------------------------------
# Load vectors
# ---------------------------------------------------------------------------


def _scatter(space: Space, nodes: np.ndarray, contrib: FloatArray) -> FloatArray:
    """Sum ``(…, 2)`` nodal contributions into an interleaved dof vector."""
    dofs = np.stack([2 * nodes, 2 * nodes + 1], axis=-1)
    return np.bincount(dofs.ravel(), weights=contrib.ravel(), minlength=space.n_dofs)


def assemble_traction(space: Space, traction: Traction) -> FloatArray:
    """``F_a = ∫_∂Ω ψ·φ_a`` on the polygonal boundary."""
    t, w, phi = _edge_quadrature(space, traction.degree)
    mesh = space.mesh
    a = mesh.nodes[mesh.boundary_edges[:, 0]]
    b = mesh.nodes[mesh.boundary_edges[:, 1]]
    pts = a[:, None, :] + t[None, :, None] * (b - a)[:, None, :]
    normals = np.repeat(mesh.edge_normals, t.size, axis=0)
    psi = traction.evaluate(pts.reshape(-1, 2), normals).reshape(pts.shape)
    contrib = np.einsum("q,e,qi,eqc->eic", w, mesh.edge_lengths, phi, psi)
    return _scatter(space, space.boundary_cells, contrib)


def assemble_body_load(space: Space, body: VectorField) -> FloatArray:
    """``F_a = ∫_Ω f·φ_a`` with a degree-5 rule."""
    ref, w = triangle_rule(BODY_LOAD_DEGREE)
    det, _ = space.geometry
    pts = space.physical_points(ref)
    f = body(pts.reshape(-1, 2)).reshape(pts.shape)
    phi = shape_values(space.order, ref)
    contrib = np.einsum("q,t,qi,tqc->tic", w, np.abs(det), phi, f)
    return _scatter(space, space.cells, contrib)


def point_load(space: Space, node: int, direction: ArrayLike) -> FloatArray:
    """Nodal load vector of a point force at *node*."""
    if not 0 <= node < space.n_nodes:
        msg = f"node index {node} out of range [0, {space.n_nodes})"
        raise InvalidInputError(msg)
    out = np.zeros(space.n_dofs)
    out[2 * node : 2 * node + 2] = np.asarray(direction, dtype=np.float64)
    return out


def compatibility_residuals(space: Space, load: FloatArray) -> FloatArray:
    """Net force and torque ``Gᵀ F`` of a load vector."""
    return rigid_modes(space).T @ load


def load_scale(space: Space, load: FloatArray) -> float:
    """Magnitude used to judge residuals: ``Σ |F_a| (1 + |x_a|)``."""
    lever = 1.0 + np.linalg.norm(space.nodes, axis=-1)
    return float(np.sum(np.linalg.norm(load.reshape(-1, 2), axis=-1) * lever))
