"""Triangular meshes of Ω that resolve a thin tube around the spine.

Points come from four sources: structured layers hugging the spine, graded
boundary samples, measurement points snapped onto ``∂Ω``, and hexagonal
background lattices whose spacing halves level by level. The point cloud is
triangulated with Delaunay after scaling, then cleaned (orientation, slivers,
unused nodes) before inclusion tags and boundary edges are derived.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import structlog
from numpy.typing import ArrayLike, NDArray
from scipy.spatial import Delaunay, QhullError, cKDTree

from emt_lab.errors import GeometryViolationError, InvalidInputError, MeshError
from emt_lab.geometry import BoundaryPiece, Domain, TubeRegion
from emt_lab.metrics import mesh_nodes, meshes_generated_total
from emt_lab.telemetry import get_tracer
from emt_lab.tensor_core import FloatArray

log = structlog.get_logger()
tracer = get_tracer(__name__)

IntArray = NDArray[np.int64]

BACKGROUND = 0
INCLUSION = 1

DEFAULT_TUBE_RESOLUTION = 2
DEFAULT_GRADING = 0.3
DEFAULT_REFINEMENT = 4.0
LAYER_EXTENT = 1.5  # structured layers reach 1.5ε from the spine
SLIVER_TOL = 1e-10
_REJECT_FACTOR = 0.7
_DENSE_SAMPLES = 4000


@dataclass(frozen=True, eq=False)
class Mesh:
    """Conforming triangulation.

    Triangles are counter-clockwise; ``tags`` marks inclusion elements;
    ``boundary_edges`` run with the interior on their left.
    """

    nodes: FloatArray
    triangles: IntArray
    tags: IntArray
    boundary_edges: IntArray

    @property
    def n_nodes(self) -> int:
        """Vertex count."""
        return int(self.nodes.shape[0])

    @property
    def n_triangles(self) -> int:
        """Triangle count."""
        return int(self.triangles.shape[0])

    @cached_property
    def areas(self) -> FloatArray:
        """Signed triangle areas, positive for counter-clockwise triangles."""
        p = self.nodes[self.triangles]
        e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @cached_property
    def centroids(self) -> FloatArray:
        """Triangle centroids, shape ``(T, 2)``."""
        return self.nodes[self.triangles].mean(axis=1)

    @cached_property
    def edge_lengths(self) -> FloatArray:
        """Lengths of the boundary edges."""
        a, b = self.nodes[self.boundary_edges[:, 0]], self.nodes[self.boundary_edges[:, 1]]
        return np.linalg.norm(b - a, axis=-1)

    @cached_property
    def edge_normals(self) -> FloatArray:
        """Outward unit normals ``(dy, −dx)/ℓ`` of boundary edges."""
        a, b = self.nodes[self.boundary_edges[:, 0]], self.nodes[self.boundary_edges[:, 1]]
        d = b - a
        return np.stack([d[:, 1], -d[:, 0]], axis=-1) / self.edge_lengths[:, None]

    @property
    def area(self) -> float:
        """Area of the polygonal domain."""
        return float(self.areas.sum())

    @property
    def perimeter(self) -> float:
        """Length of the polygonal boundary, ``|∂Ω|``."""
        return float(self.edge_lengths.sum())

    @property
    def inclusion_area(self) -> float:
        """Area of the elements tagged as inclusion."""
        return float(self.areas[self.tags == INCLUSION].sum())

    @cached_property
    def boundary_nodes(self) -> IntArray:
        """Sorted indices of the vertices on boundary edges."""
        return np.unique(self.boundary_edges)

    def find_boundary_node(self, point: ArrayLike, tol: float = 1e-9) -> int:
        """Index of the boundary vertex at *point*.

        Raises:
            InvalidInputError: no boundary vertex lies within *tol*.
        """
        p = np.asarray(point, dtype=np.float64)
        candidates = self.boundary_nodes
        dist = np.linalg.norm(self.nodes[candidates] - p, axis=-1)
        k = int(np.argmin(dist))
        if dist[k] > tol:
            msg = f"point ({p[0]:.6g}, {p[1]:.6g}) is not a boundary node of the mesh"
            raise InvalidInputError(msg)
        return int(candidates[k])

    def summary(self) -> dict[str, float]:
        """Counts and areas for logs and reports."""
        return {
            "nodes": self.n_nodes,
            "triangles": self.n_triangles,
            "boundary_edges": int(self.boundary_edges.shape[0]),
            "area": self.area,
            "inclusion_area": self.inclusion_area,
        }


# ---------------------------------------------------------------------------
# Cleanup
# ---------------------------------------------------------------------------


def _triangulate(points: FloatArray) -> IntArray:
    """Delaunay on points scaled to the unit box."""
    lo = points.min(axis=0)
    span = float((points.max(axis=0) - lo).max())
    if span <= 0.0:
        msg = "degenerate point cloud"
        raise MeshError(msg)
    try:
        tri = Delaunay((points - lo) / span)
    except QhullError as exc:
        msg = f"Delaunay triangulation failed: {exc}"
        raise MeshError(msg) from exc
    return tri.simplices.astype(np.int64)


def fix_mesh(nodes: FloatArray, triangles: IntArray) -> tuple[FloatArray, IntArray]:
    """Orient triangles counter-clockwise, drop slivers and unused nodes."""
    p = nodes[triangles]
    e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    area = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    tri = triangles.copy()
    flip = area < 0.0
    tri[flip] = tri[flip][:, [0, 2, 1]]
    keep = np.abs(area) > SLIVER_TOL * np.abs(area).max()
    tri = tri[keep]
    used = np.unique(tri)
    remap = np.full(nodes.shape[0], -1, dtype=np.int64)
    remap[used] = np.arange(used.size)
    return nodes[used], remap[tri]


def boundary_edges(triangles: IntArray) -> IntArray:
    """Edges used by one triangle, oriented as in that triangle."""
    directed = np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    keys = np.sort(directed, axis=1)
    _, inverse, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
    return directed[counts[inverse.ravel()] == 1]


def _check_boundary(edges: IntArray) -> None:
    """Every boundary vertex must have exactly one incoming and one outgoing edge."""
    out_deg = np.bincount(edges[:, 0])
    in_deg = np.bincount(edges[:, 1], minlength=out_deg.size)
    out_deg = np.pad(out_deg, (0, in_deg.size - out_deg.size))
    used = (out_deg > 0) | (in_deg > 0)
    if np.any(out_deg[used] != 1) or np.any(in_deg[used] != 1):
        msg = "triangulation boundary is not a simple closed polygon"
        raise MeshError(msg)


# ---------------------------------------------------------------------------
# Point placement
# ---------------------------------------------------------------------------


def _graded_piece(piece: BoundaryPiece, size: Callable[[FloatArray], FloatArray]) -> FloatArray:
    """Boundary points with spacing following *size* (open pieces omit the end)."""
    t = np.linspace(0.0, 1.0, _DENSE_SAMPLES + 1)
    density = piece.length / size(piece.at(t))
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (density[1:] + density[:-1]) * np.diff(t))])
    total = float(cum[-1])
    n = max(8 if piece.closed else 1, math.ceil(total))
    targets = np.linspace(0.0, total, n + 1)[:-1]
    return piece.at(np.interp(targets, cum, t))


def _tube_points(tube: TubeRegion, spacing: float) -> FloatArray:
    """Layers parallel to the spine at offsets ``j·spacing`` up to 1.5ε."""
    curve, eps = tube.curve, tube.half_width
    n_layers = math.floor(LAYER_EXTENT * eps / spacing + 1e-9)
    n_along = max(2, math.ceil(curve.length / spacing))
    blocks: list[FloatArray] = []
    for j in range(-n_layers, n_layers + 1):
        if curve.closed:
            s = np.linspace(0.0, curve.length, n_along + 1)[:-1]
            if j % 2:
                s = s + 0.5 * curve.length / n_along
        else:
            s = np.linspace(0.0, curve.length, n_along + 1)
            if j % 2:
                s = 0.5 * (s[1:] + s[:-1])
        blocks.append(curve.point(s) + j * spacing * curve.normal(s))
    if not curve.closed:
        ends = (
            (curve.point([0.0])[0], -curve.tangent([0.0])[0], curve.normal([0.0])[0]),
            (curve.point([curve.length])[0], curve.tangent([curve.length])[0],
             curve.normal([curve.length])[0]),
        )
        for centre, axis, normal in ends:
            for j in range(1, n_layers + 1):
                rho = j * spacing
                m = max(2, math.ceil(math.pi * rho / spacing))
                phi = np.linspace(-0.5 * math.pi, 0.5 * math.pi, m + 1)
                dirs = np.cos(phi)[:, None] * axis + np.sin(phi)[:, None] * normal
                blocks.append(centre + rho * dirs)
    return np.vstack(blocks)


def _lattice(lower: FloatArray, upper: FloatArray, spacing: float) -> FloatArray:
    """Hexagonal lattice covering a box."""
    dy = spacing * math.sqrt(3.0) / 2.0
    ys = np.arange(lower[1], upper[1] + dy, dy)
    xs = np.arange(lower[0] - spacing, upper[0] + spacing, spacing)
    rows = [np.column_stack([xs + (0.5 * spacing if i % 2 else 0.0), np.full(xs.size, y)])
            for i, y in enumerate(ys)]
    return np.vstack(rows) if rows else np.empty((0, 2))


def _dedupe(points: FloatArray, tol: float) -> FloatArray:
    """Drop later duplicates within *tol*."""
    pairs = cKDTree(points).query_pairs(tol, output_type="ndarray")
    if pairs.size == 0:
        return points
    drop = np.zeros(points.shape[0], dtype=bool)
    drop[pairs.max(axis=1)] = True
    return points[~drop]


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------


def generate_mesh(
    domain: Domain,
    tube: TubeRegion | None,
    h: float,
    *,
    tube_resolution: int = DEFAULT_TUBE_RESOLUTION,
    grading: float = DEFAULT_GRADING,
    refine_points: Sequence[ArrayLike] = (),
    refine_factor: float = DEFAULT_REFINEMENT,
) -> Mesh:
    """Mesh *domain*, resolving *tube* with ``tube_resolution`` layers per ε.

    Measurement points in *refine_points* must lie on ``∂Ω``; they become mesh
    vertices with local size ``h / refine_factor``.

    Raises:
        InvalidInputError: non-positive sizes or off-boundary refinement points.
        GeometryViolationError: the tube layers leave Ω or exceed the spine's reach.
        MeshError: the triangulation is unusable.
    """
    if h <= 0.0 or grading <= 0.0 or refine_factor < 1.0:
        msg = f"mesh parameters out of range: h={h}, grading={grading}, refine={refine_factor}"
        raise InvalidInputError(msg)
    if tube is not None and tube_resolution < DEFAULT_TUBE_RESOLUTION:
        msg = f"tube_resolution must be at least 2 element layers per ε, got {tube_resolution}"
        raise InvalidInputError(msg)

    with tracer.start_as_current_span("mesh.generate") as span:
        span.set_attribute("mesh.h", h)
        ys = [np.asarray(y, dtype=np.float64) for y in refine_points]
        for y in ys:
            if abs(float(domain.boundary_distance(y)[0])) > 1e-9:
                msg = f"refinement point ({y[0]:.6g}, {y[1]:.6g}) is not on the boundary"
                raise InvalidInputError(msg)
        h_y = h / refine_factor

        h_tube = math.inf
        extent = 0.0
        if tube is not None:
            eps = tube.half_width
            h_tube = eps / tube_resolution
            extent = LAYER_EXTENT * eps
            _check_tube(domain, tube, extent, h_tube)
            span.set_attribute("mesh.eps", eps)

        def size(x: FloatArray) -> FloatArray:
            pts = np.atleast_2d(x)
            s = np.full(pts.shape[0], h)
            if tube is not None:
                _, d = tube.curve.closest(pts)
                s = np.minimum(s, h_tube + grading * np.maximum(d - extent, 0.0))
            for y in ys:
                s = np.minimum(s, h_y + grading * np.linalg.norm(pts - y, axis=-1))
            return s

        structured: list[FloatArray] = []
        for piece in domain.pieces():
            structured.append(_graded_piece(piece, size))
        boundary = np.vstack(structured)
        for y in ys:
            near = np.linalg.norm(boundary - y, axis=-1) < 0.5 * float(size(y)[0])
            boundary = np.vstack([boundary[~near], y])
        structured = [boundary]
        if tube is not None:
            inner = _tube_points(tube, h_tube)
            structured.append(inner)

        accepted = np.vstack(structured)
        h_min = min(h, h_tube, h_y if ys else h)
        n_levels = max(0, math.ceil(math.log2(h / h_min) - 1e-9))
        lower, upper = domain.bounding_box()
        for level in range(n_levels, -1, -1):
            spacing = h / 2**level
            box_lo, box_hi = _level_box(domain, tube, ys, spacing, extent, h_tube, h_y, grading, h)
            cand = _lattice(np.maximum(box_lo, lower), np.minimum(box_hi, upper), spacing)
            if cand.size == 0:
                continue
            s = size(cand)
            want = np.clip(np.ceil(np.log2(h / s) - 1e-9), 0, n_levels).astype(int)
            keep = (want == level) & (domain.boundary_distance(cand) >= 0.5 * s)
            if tube is not None:
                _, d = tube.curve.closest(cand)
                keep &= d >= extent + 0.5 * h_tube
            cand = cand[keep]
            if cand.size == 0:
                continue
            dist, _ = cKDTree(accepted).query(cand)
            cand = cand[dist >= _REJECT_FACTOR * spacing]
            # Greedy thinning among the candidates themselves.
            chosen = _thin(cand, _REJECT_FACTOR * spacing)
            accepted = np.vstack([accepted, chosen])

        points = _dedupe(accepted, 1e-6 * h_min)
        nodes, triangles = fix_mesh(points, _triangulate(points))
        edges = boundary_edges(triangles)
        _check_boundary(edges)

        tags = np.full(triangles.shape[0], BACKGROUND, dtype=np.int64)
        if tube is not None:
            _, d = tube.curve.closest(nodes[triangles].mean(axis=1))
            tags[d < tube.half_width] = INCLUSION
        mesh = Mesh(nodes, triangles, tags, edges)
        for y in ys:
            mesh.find_boundary_node(y)

        meshes_generated_total.add(1)
        mesh_nodes.record(mesh.n_nodes)
        span.set_attribute("mesh.nodes", mesh.n_nodes)
        log.info("mesh_generated", **mesh.summary())
        return mesh


def _check_tube(domain: Domain, tube: TubeRegion, extent: float, h_tube: float) -> None:
    curve = tube.curve
    violations: list[str] = []
    if extent >= curve.reach:
        violations.append(
            f"tube layers reach {extent:.4g} but the spine reach is {curve.reach:.4g}"
        )
    _, pts = curve.sample(512)
    clearance = float(domain.boundary_distance(pts).min())
    if clearance <= extent + h_tube:
        violations.append(
            f"tube layers leave the domain (clearance {clearance:.4g} <= {extent + h_tube:.4g})"
        )
    if violations:
        raise GeometryViolationError("; ".join(violations), violations)


def _level_box(
    domain: Domain,
    tube: TubeRegion | None,
    ys: list[FloatArray],
    spacing: float,
    extent: float,
    h_tube: float,
    h_y: float,
    grading: float,
    h: float,
) -> tuple[FloatArray, FloatArray]:
    """Box holding every point whose target level can be this fine."""
    if 2.0 * spacing >= h:
        return domain.bounding_box()
    los: list[FloatArray] = []
    his: list[FloatArray] = []
    if tube is not None:
        reach = extent + max(0.0, 2.0 * spacing - h_tube) / grading
        _, pts = tube.curve.sample(512)
        los.append(pts.min(axis=0) - reach)
        his.append(pts.max(axis=0) + reach)
    for y in ys:
        reach = max(0.0, 2.0 * spacing - h_y) / grading
        los.append(y - reach)
        his.append(y + reach)
    if not los:
        return domain.bounding_box()
    return np.min(los, axis=0), np.max(his, axis=0)


def _thin(points: FloatArray, radius: float) -> FloatArray:
    """Greedy subset with pairwise distances at least *radius*."""
    if points.shape[0] < 2:
        return points
    pairs = cKDTree(points).query_pairs(radius, output_type="ndarray")
    if pairs.size == 0:
        return points
    neighbours: list[list[int]] = [[] for _ in range(points.shape[0])]
    for a, b in pairs:
        neighbours[int(a)].append(int(b))
        neighbours[int(b)].append(int(a))
    blocked = np.zeros(points.shape[0], dtype=bool)
    keep = np.zeros(points.shape[0], dtype=bool)
    for i in range(points.shape[0]):
        if blocked[i]:
            continue
        keep[i] = True
        blocked[neighbours[i]] = True
    return points[keep]


# ---------------------------------------------------------------------------
# Text format
# ---------------------------------------------------------------------------


def write_mesh(mesh: Mesh, path: Path) -> None:
    """Write the plain-text mesh format.

    Header ``nodes N triangles T edges E``, then ``x y`` lines, ``i j k tag``
    lines and ``i j`` boundary-edge lines; indices are 0-based.
    """
    lines = [
        f"nodes {mesh.n_nodes} triangles {mesh.n_triangles} edges {mesh.boundary_edges.shape[0]}"
    ]
    lines += [f"{x:.17g} {y:.17g}" for x, y in mesh.nodes]
    lines += [f"{i} {j} {k} {t}" for (i, j, k), t in zip(mesh.triangles, mesh.tags, strict=True)]
    lines += [f"{i} {j}" for i, j in mesh.boundary_edges]
    path.write_text("\n".join(lines) + "\n")


def read_mesh(path: Path) -> Mesh:
    """Parse a file written by :func:`write_mesh`.

    Raises:
        InvalidInputError: malformed header or body.
    """
    rows = path.read_text().splitlines()
    try:
        head = rows[0].split()
        if head[0::2] != ["nodes", "triangles", "edges"]:
            raise ValueError(rows[0])
        n, t, e = (int(v) for v in head[1::2])
        body = rows[1 : 1 + n + t + e]
        if len(body) != n + t + e:
            raise ValueError("truncated mesh file")
        nodes = np.array([[float(v) for v in r.split()] for r in body[:n]]).reshape(n, 2)
        tri = np.array([[int(v) for v in r.split()] for r in body[n : n + t]]).reshape(t, 4)
        edges = np.array([[int(v) for v in r.split()] for r in body[n + t :]]).reshape(e, 2)
    except (IndexError, ValueError) as exc:
        msg = f"malformed mesh file {path}: {exc}"
        raise InvalidInputError(msg) from exc
    return Mesh(
        nodes, tri[:, :3].astype(np.int64), tri[:, 3].astype(np.int64), edges.astype(np.int64)
    )
