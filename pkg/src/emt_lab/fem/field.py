"""Finite element displacement fields: evaluation, norms and export."""

from __future__ import annotations

import csv
from collections.abc import Callable
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike
from scipy.spatial import cKDTree

from emt_lab.errors import InvalidInputError, PointOutsideMeshError
from emt_lab.fem.elements import Space, physical_grads, shape_grads, shape_values, triangle_rule
from emt_lab.tensor_core import FloatArray, SymMat2, mandel_vectors

NORM_DEGREE = 5
_INSIDE_TOL = 1e-10
_NEIGHBOURS = 16


@dataclass(frozen=True, eq=False)
class FemField:
    """Nodal displacement values ``(n_nodes, 2)`` on a space."""

    space: Space
    values: FloatArray

    def __post_init__(self) -> None:
        if self.values.shape != (self.space.n_nodes, 2):
            msg = f"expected values of shape ({self.space.n_nodes}, 2), got {self.values.shape}"
            raise InvalidInputError(msg)

    @property
    def dofs(self) -> FloatArray:
        """Interleaved dof vector."""
        return self.values.reshape(-1)

    def _same_space(self, other: FemField) -> None:
        if other.space is not self.space:
            msg = "fields live on different meshes or element orders"
            raise InvalidInputError(msg)

    def __add__(self, other: FemField) -> FemField:
        self._same_space(other)
        return FemField(self.space, self.values + other.values)

    def __sub__(self, other: FemField) -> FemField:
        self._same_space(other)
        return FemField(self.space, self.values - other.values)

    def __mul__(self, scalar: float) -> FemField:
        return FemField(self.space, scalar * self.values)

    __rmul__ = __mul__

    def at_node(self, node: int) -> FloatArray:
        """Exact nodal value."""
        return self.values[node].copy()


# ---------------------------------------------------------------------------
# Point location
# ---------------------------------------------------------------------------


def _barycentric(space: Space, tri: np.ndarray, pts: FloatArray) -> FloatArray:
    """Barycentric coordinates ``(..., 3)`` of *pts* in triangles *tri*."""
    mesh = space.mesh
    p = mesh.nodes[mesh.triangles[tri]]
    _, inv = space.geometry
    ref = np.einsum("...ij,...j->...i", inv[tri], pts - p[..., 0, :])
    return np.concatenate([1.0 - ref.sum(axis=-1, keepdims=True), ref], axis=-1)


def locate(space: Space, points: ArrayLike) -> tuple[np.ndarray, np.ndarray, FloatArray]:
    """Every (point, triangle) incidence with reference coordinates.

    Points on shared edges or vertices appear once per containing triangle.

    Raises:
        PointOutsideMeshError: a point is not covered by the mesh.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    mesh = space.mesh
    k = min(_NEIGHBOURS, mesh.n_triangles)
    _, cand = cKDTree(mesh.centroids).query(pts, k=k)
    cand = np.asarray(cand).reshape(pts.shape[0], k)
    bary = _barycentric(space, cand, pts[:, None, :])
    scale = _INSIDE_TOL * max(1.0, float(np.abs(mesh.nodes).max()))
    inside = np.all(bary >= -scale, axis=-1)
    pidx, slot = np.nonzero(inside)
    tri = cand[pidx, slot]
    ref = bary[pidx, slot, 1:]
    missing = np.setdiff1d(np.arange(pts.shape[0]), pidx)
    if missing.size:
        all_tri = np.broadcast_to(np.arange(mesh.n_triangles), (missing.size, mesh.n_triangles))
        b_all = _barycentric(space, all_tri, pts[missing, None, :])
        hit_p, hit_t = np.nonzero(np.all(b_all >= -scale, axis=-1))
        lost = np.setdiff1d(np.arange(missing.size), hit_p)
        if lost.size:
            q = pts[missing[lost[0]]]
            msg = f"point ({q[0]:.6g}, {q[1]:.6g}) lies outside the mesh"
            raise PointOutsideMeshError(msg)
        pidx = np.concatenate([pidx, missing[hit_p]])
        tri = np.concatenate([tri, hit_t])
        ref = np.concatenate([ref, b_all[hit_p, hit_t, 1:]])
    return pidx, tri, ref


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def evaluate(field: FemField, points: ArrayLike) -> FloatArray:
    """Displacements ``(m, 2)`` at arbitrary points of the mesh."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    pidx, tri, ref = locate(field.space, pts)
    phi = shape_values(field.space.order, ref)
    vals = np.einsum("pb,pbc->pc", phi, field.values[field.space.cells[tri]])
    return _average(pidx, vals, pts.shape[0])


def _average(pidx: np.ndarray, vals: FloatArray, m: int) -> FloatArray:
    counts = np.bincount(pidx, minlength=m).astype(np.float64)
    flat = vals.reshape(vals.shape[0], -1)
    out = np.stack(
        [np.bincount(pidx, weights=flat[:, c], minlength=m) for c in range(flat.shape[1])],
        axis=-1,
    )
    return (out / counts[:, None]).reshape((m, *vals.shape[1:]))


def _element_gradients(field: FemField, tri: np.ndarray, ref: FloatArray) -> FloatArray:
    """``(p, 2, 2)`` gradients ``∂_j u_i`` at reference points of triangles *tri*."""
    space = field.space
    _, inv = space.geometry
    ref_g = shape_grads(space.order, ref)
    grads = np.einsum("pbk,pkj->pbj", ref_g, inv[tri])
    return np.einsum("pbj,pbi->pij", grads, field.values[space.cells[tri]])


def _recovered_gradients(field: FemField) -> FloatArray:
    """Area-weighted nodal averages of the piecewise-constant P1 gradient."""
    space = field.space
    mesh = space.mesh
    centre = np.full((mesh.n_triangles, 2), 1.0 / 3.0)
    g = _element_gradients(field, np.arange(mesh.n_triangles), centre)
    weights = np.repeat(np.abs(mesh.areas), 3)
    nodes = mesh.triangles.ravel()
    flat = np.repeat(g.reshape(-1, 4), 3, axis=0)
    total = np.stack(
        [
            np.bincount(nodes, weights=weights * flat[:, c], minlength=mesh.n_nodes)
            for c in range(4)
        ],
        axis=-1,
    )
    area = np.bincount(nodes, weights=weights, minlength=mesh.n_nodes)
    return (total / area[:, None]).reshape(-1, 2, 2)


def gradient_array(
    field: FemField, points: ArrayLike, *, symmetric: bool = True, recovery: bool = False
) -> FloatArray:
    """Displacement gradients ``(m, 2, 2)`` averaged over containing elements.

    With ``recovery`` (P1 only) the patch-averaged nodal gradient is
    interpolated instead.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    pidx, tri, ref = locate(field.space, pts)
    if recovery:
        if field.space.order != 1:
            msg = "gradient recovery is defined for P1 fields only"
            raise InvalidInputError(msg)
        nodal = _recovered_gradients(field)
        lin = shape_values(1, ref)
        vals = np.einsum("pb,pbij->pij", lin, nodal[field.space.cells[tri]])
    else:
        vals = _element_gradients(field, tri, ref)
    grad = _average(pidx, vals, pts.shape[0])
    if symmetric:
        grad = 0.5 * (grad + np.swapaxes(grad, -1, -2))
    return grad


def evaluate_gradient(
    field: FemField, points: ArrayLike, *, recovery: bool = False
) -> list[SymMat2]:
    """Symmetric gradients ``∇̂u`` at *points*."""
    return [SymMat2.from_matrix(g) for g in gradient_array(field, points, recovery=recovery)]


# ---------------------------------------------------------------------------
# Quadrature-point data and norms
# ---------------------------------------------------------------------------


def element_strains(field: FemField, degree: int = NORM_DEGREE) -> tuple[FloatArray, FloatArray]:
    """Mandel strains ``(T, q, 3)`` and weights ``(T, q)`` at quadrature points."""
    space = field.space
    ref, w = triangle_rule(degree)
    det, inv = space.geometry
    grads = physical_grads(shape_grads(space.order, ref), inv)
    du = np.einsum("tqbj,tbi->tqij", grads, field.values[space.cells])
    strain = mandel_vectors(0.5 * (du + np.swapaxes(du, -1, -2)))
    return strain, np.abs(det)[:, None] * w[None, :]


def energy_norms(a: FemField, b: FemField) -> tuple[float, float]:
    """``‖a − b‖_{L²}`` and the full ``H¹`` norm of the difference."""
    d = a - b
    space = d.space
    ref, w = triangle_rule(NORM_DEGREE)
    det, inv = space.geometry
    phi = shape_values(space.order, ref)
    grads = physical_grads(shape_grads(space.order, ref), inv)
    local = d.values[space.cells]
    vals = np.einsum("qb,tbi->tqi", phi, local)
    du = np.einsum("tqbj,tbi->tqij", grads, local)
    weights = np.abs(det)[:, None] * w[None, :]
    l2 = float(np.sum(weights * np.sum(vals**2, axis=-1)))
    semi = float(np.sum(weights * np.sum(du**2, axis=(-1, -2))))
    return float(np.sqrt(l2)), float(np.sqrt(l2 + semi))


def l2_error(field: FemField, exact: Callable[[FloatArray], FloatArray]) -> float:
    """``‖u_h − u‖_{L²}`` against a closed-form displacement."""
    space = field.space
    ref, w = triangle_rule(NORM_DEGREE)
    det, _ = space.geometry
    pts = space.physical_points(ref)
    vals = np.einsum("qb,tbi->tqi", shape_values(space.order, ref), field.values[space.cells])
    err = vals - exact(pts.reshape(-1, 2)).reshape(pts.shape)
    weights = np.abs(det)[:, None] * w[None, :]
    return float(np.sqrt(np.sum(weights * np.sum(err**2, axis=-1))))


def write_field_csv(field: FemField, path: Path) -> None:
    """Write ``node,x,y,ux,uy`` rows for every node of the space."""
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node", "x", "y", "ux", "uy"])
        for idx, ((x, y), (ux, uy)) in enumerate(
            zip(field.space.nodes, field.values, strict=True)
        ):
            writer.writerow([idx, *(repr(float(v)) for v in (x, y, ux, uy))])
