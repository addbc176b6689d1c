"""Lagrange P1/P2 triangles, quadrature rules and the degree-of-freedom layout."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Literal

import numpy as np
from numpy.polynomial.legendre import leggauss
from numpy.typing import ArrayLike, NDArray

from emt_lab.errors import InvalidInputError
from emt_lab.fem.mesh import Mesh
from emt_lab.tensor_core import FloatArray

IntArray = NDArray[np.int64]
Order = Literal[1, 2]

# Dunavant rules in barycentric form, weights normalized to 1.
_A4, _B4 = 0.445948490915965, 0.091576213509771
_W4A, _W4B = 0.223381589678011, 0.109951743655322
_A5, _B5 = 0.059715871789770, 0.470142064105115
_C5, _D5 = 0.797426985353087, 0.101286507323456
_W5A, _W5B = 0.132394152788506, 0.125939180544827

_RULES: dict[int, tuple[list[tuple[float, float, float]], list[float]]] = {
    1: ([(1 / 3, 1 / 3, 1 / 3)], [1.0]),
    2: ([(2 / 3, 1 / 6, 1 / 6), (1 / 6, 2 / 3, 1 / 6), (1 / 6, 1 / 6, 2 / 3)], [1 / 3] * 3),
    4: (
        [
            (1 - 2 * _A4, _A4, _A4),
            (_A4, 1 - 2 * _A4, _A4),
            (_A4, _A4, 1 - 2 * _A4),
            (1 - 2 * _B4, _B4, _B4),
            (_B4, 1 - 2 * _B4, _B4),
            (_B4, _B4, 1 - 2 * _B4),
        ],
        [_W4A] * 3 + [_W4B] * 3,
    ),
    5: (
        [
            (1 / 3, 1 / 3, 1 / 3),
            (_A5, _B5, _B5),
            (_B5, _A5, _B5),
            (_B5, _B5, _A5),
            (_C5, _D5, _D5),
            (_D5, _C5, _D5),
            (_D5, _D5, _C5),
        ],
        [0.225] + [_W5A] * 3 + [_W5B] * 3,
    ),
}


def triangle_rule(degree: int) -> tuple[FloatArray, FloatArray]:
    """Quadrature on the reference triangle exact for polynomials of *degree*.

    Returns reference points ``(q, 2)`` as ``(ξ, η)`` and weights summing to ½.
    """
    available = sorted(_RULES)
    chosen = next((d for d in available if d >= degree), None)
    if chosen is None:
        msg = f"no triangle rule of degree {degree} (max {available[-1]})"
        raise InvalidInputError(msg)
    bary, weights = _RULES[chosen]
    b = np.asarray(bary)
    return b[:, 1:].copy(), 0.5 * np.asarray(weights)


def line_rule(n_points: int) -> tuple[FloatArray, FloatArray]:
    """Gauss–Legendre rule on ``[0, 1]``."""
    x, w = leggauss(n_points)
    return 0.5 * (x + 1.0), 0.5 * w


def shape_values(order: Order, ref: ArrayLike) -> FloatArray:
    """Basis values ``(q, nb)`` at reference points ``(q, 2)``.

    P2 ordering: vertices, then midpoints of edges 01, 12, 20.
    """
    pts = np.atleast_2d(np.asarray(ref, dtype=np.float64))
    xi, eta = pts[:, 0], pts[:, 1]
    l0, l1, l2 = 1.0 - xi - eta, xi, eta
    if order == 1:
        return np.stack([l0, l1, l2], axis=-1)
    return np.stack(
        [
            l0 * (2 * l0 - 1),
            l1 * (2 * l1 - 1),
            l2 * (2 * l2 - 1),
            4 * l0 * l1,
            4 * l1 * l2,
            4 * l2 * l0,
        ],
        axis=-1,
    )


def shape_grads(order: Order, ref: ArrayLike) -> FloatArray:
    """Reference gradients ``(q, nb, 2)``."""
    pts = np.atleast_2d(np.asarray(ref, dtype=np.float64))
    q = pts.shape[0]
    xi, eta = pts[:, 0], pts[:, 1]
    l0, l1, l2 = 1.0 - xi - eta, xi, eta
    dl = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    if order == 1:
        return np.broadcast_to(dl, (q, 3, 2)).copy()
    lam = np.stack([l0, l1, l2], axis=-1)
    out = np.empty((q, 6, 2))
    for i in range(3):
        out[:, i, :] = (4 * lam[:, i] - 1)[:, None] * dl[i]
    for m, (a, b) in enumerate(((0, 1), (1, 2), (2, 0))):
        out[:, 3 + m, :] = 4 * (lam[:, a, None] * dl[b] + lam[:, b, None] * dl[a])
    return out


def edge_shape_values(order: Order, t: ArrayLike) -> FloatArray:
    """Trace basis on an edge ``(a, b[, mid])`` at parameters *t* in ``[0, 1]``."""
    tv = np.atleast_1d(np.asarray(t, dtype=np.float64))
    if order == 1:
        return np.stack([1 - tv, tv], axis=-1)
    return np.stack([(1 - tv) * (1 - 2 * tv), tv * (2 * tv - 1), 4 * tv * (1 - tv)], axis=-1)


def jacobians(coords: FloatArray) -> tuple[FloatArray, FloatArray]:
    """Determinants ``(T,)`` and inverse Jacobians ``(T, 2, 2)`` of affine maps."""
    e1 = coords[:, 1] - coords[:, 0]
    e2 = coords[:, 2] - coords[:, 0]
    jac = np.stack([e1, e2], axis=-1)
    det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
    inv = np.empty_like(jac)
    inv[:, 0, 0] = jac[:, 1, 1] / det
    inv[:, 1, 1] = jac[:, 0, 0] / det
    inv[:, 0, 1] = -jac[:, 0, 1] / det
    inv[:, 1, 0] = -jac[:, 1, 0] / det
    return det, inv


def physical_grads(ref_grads: FloatArray, inv_jac: FloatArray) -> FloatArray:
    """``(T, q, nb, 2)`` physical gradients from ``(q, nb, 2)`` reference ones."""
    return np.einsum("qbk,tkj->tqbj", ref_grads, inv_jac)


@dataclass(frozen=True, eq=False)
class Space:
    """Vector-valued Lagrange space on a mesh.

    Nodes are the mesh vertices followed (P2) by one midpoint per edge.
    Degrees of freedom are interleaved: node ``a`` owns ``2a`` and ``2a + 1``.
    """

    mesh: Mesh
    order: Order
    nodes: FloatArray
    cells: IntArray
    boundary_cells: IntArray

    @property
    def n_nodes(self) -> int:
        """Number of scalar nodes."""
        return int(self.nodes.shape[0])

    @property
    def n_dofs(self) -> int:
        """Number of displacement unknowns."""
        return 2 * self.n_nodes

    @cached_property
    def cell_dofs(self) -> IntArray:
        """``(T, 2·nb)`` interleaved dof indices per cell."""
        return np.stack([2 * self.cells, 2 * self.cells + 1], axis=-1).reshape(
            self.cells.shape[0], -1
        )

    @cached_property
    def geometry(self) -> tuple[FloatArray, FloatArray]:
        """Jacobian determinants and inverses of every cell."""
        return jacobians(self.mesh.nodes[self.mesh.triangles])

    def quadrature(self, degree: int) -> tuple[FloatArray, FloatArray, FloatArray]:
        """Reference points, weights and physical gradients ``(T, q, nb, 2)``."""
        ref, w = triangle_rule(degree)
        _, inv = self.geometry
        return ref, w, physical_grads(shape_grads(self.order, ref), inv)

    def physical_points(self, ref: FloatArray) -> FloatArray:
        """Images ``(T, q, 2)`` of reference points in every cell."""
        coords = self.mesh.nodes[self.mesh.triangles]
        lin = shape_values(1, ref)
        return np.einsum("qa,tai->tqi", lin, coords)


def build_space(mesh: Mesh, order: Order = 2) -> Space:
    """Lay out P1 or P2 nodes on *mesh*."""
    if order not in (1, 2):
        msg = f"element order must be 1 or 2, got {order}"
        raise InvalidInputError(msg)
    tri = mesh.triangles
    if order == 1:
        return Space(mesh, 1, mesh.nodes.copy(), tri.copy(), mesh.boundary_edges.copy())
    local = np.stack([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]], axis=1)
    keys = np.sort(local.reshape(-1, 2), axis=1)
    edges, inverse = np.unique(keys, axis=0, return_inverse=True)
    n_vertices = mesh.nodes.shape[0]
    mids = 0.5 * (mesh.nodes[edges[:, 0]] + mesh.nodes[edges[:, 1]])
    cells = np.hstack([tri, n_vertices + inverse.reshape(-1, 3)])
    bkeys = np.sort(mesh.boundary_edges, axis=1)
    lookup = {(int(a), int(b)): i for i, (a, b) in enumerate(edges)}
    bmid = np.array([n_vertices + lookup[(int(a), int(b))] for a, b in bkeys], dtype=np.int64)
    boundary = np.column_stack([mesh.boundary_edges, bmid])
    return Space(mesh, 2, np.vstack([mesh.nodes, mids]), cells.astype(np.int64), boundary)
