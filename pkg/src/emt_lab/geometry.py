"""Inclusion spines, their frames and tubes, and the admissibility checks.

A spine is a segment, a circular arc (a full circle when it sweeps 2π) or a
cubic spline through control points. Everything is parametrized by
arclength ``s ∈ [0, L]`` and vectorized over arrays of ``s`` or points.
The normal is the tangent rotated by −90°; closed spines use the outward
normal instead, open ones may flip it.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import cached_property
from typing import Annotated, Literal

import numpy as np
import structlog
from numpy.polynomial.legendre import leggauss
from numpy.typing import ArrayLike
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.interpolate import CubicSpline
from scipy.spatial import cKDTree

from emt_lab.emt import Frame
from emt_lab.errors import InvalidInputError, OutsideReachError
from emt_lab.tensor_core import FloatArray

log = structlog.get_logger()

Point2 = tuple[float, float]

DEFAULT_BETA = 0.45
VALIDATION_SAMPLES = 400
ROUNDTRIP_TOL = 1e-9
_NEWTON_STEPS = 30


# ---------------------------------------------------------------------------
# Specs (JSON / config surface)
# ---------------------------------------------------------------------------


class SegmentSpec(BaseModel):
    """Straight spine from ``p0`` to ``p1``."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["segment"] = "segment"
    p0: Point2 = Field(description="Start point")
    p1: Point2 = Field(description="End point")
    flip_normal: bool = Field(default=False, description="Use τ rotated by +90° as normal")

    @model_validator(mode="after")
    def _check_length(self) -> SegmentSpec:
        if math.dist(self.p0, self.p1) <= 0.0:
            msg = "segment endpoints must differ"
            raise ValueError(msg)
        return self


class ArcSpec(BaseModel):
    """Circular arc from ``angle0`` to ``angle1`` (radians; a 2π sweep is a circle)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["arc"] = "arc"
    center: Point2 = Field(description="Circle centre")
    radius: float = Field(gt=0.0, description="Circle radius")
    angle0: float = Field(description="Start angle in radians")
    angle1: float = Field(description="End angle in radians; below angle0 runs clockwise")
    flip_normal: bool = Field(default=False, description="Flip the normal of an open arc")

    @model_validator(mode="after")
    def _check_sweep(self) -> ArcSpec:
        sweep = abs(self.angle1 - self.angle0)
        if sweep <= 0.0 or sweep > 2.0 * math.pi + 1e-12:
            msg = f"arc sweep must lie in (0, 2π], got {sweep}"
            raise ValueError(msg)
        return self


class SplineSpec(BaseModel):
    """Cubic spline through control points (chord-length parametrized)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["spline"] = "spline"
    points: list[Point2] = Field(min_length=3, description="Control points")
    closed: bool = Field(default=False, description="Periodic spline through the points")
    flip_normal: bool = Field(default=False, description="Flip the normal of an open spline")


CurveSpec = Annotated[SegmentSpec | ArcSpec | SplineSpec, Field(discriminator="kind")]


class DiskSpec(BaseModel):
    """Disk domain."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["disk"] = "disk"
    center: Point2 = Field(default=(0.0, 0.0), description="Disk centre")
    radius: float = Field(default=1.0, gt=0.0, description="Disk radius")


class RectangleSpec(BaseModel):
    """Axis-aligned rectangle domain."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["rectangle"] = "rectangle"
    lower: Point2 = Field(description="Lower-left corner")
    upper: Point2 = Field(description="Upper-right corner")

    @model_validator(mode="after")
    def _check_corners(self) -> RectangleSpec:
        if not (self.upper[0] > self.lower[0] and self.upper[1] > self.lower[1]):
            msg = f"rectangle corners out of order: {self.lower} / {self.upper}"
            raise ValueError(msg)
        return self


DomainSpec = Annotated[DiskSpec | RectangleSpec, Field(discriminator="kind")]


# ---------------------------------------------------------------------------
# Curves
# ---------------------------------------------------------------------------


class Curve(ABC):
    """Arclength-parametrized planar spine."""

    length: float
    closed: bool
    flip: bool

    @abstractmethod
    def point(self, s: ArrayLike) -> FloatArray:
        """Points ``(m, 2)`` at arclengths *s*."""

    @abstractmethod
    def tangent(self, s: ArrayLike) -> FloatArray:
        """Unit tangents ``(m, 2)``."""

    @abstractmethod
    def curvature(self, s: ArrayLike) -> FloatArray:
        """Signed curvature (positive when turning left)."""

    @abstractmethod
    def closest(self, points: ArrayLike) -> tuple[FloatArray, FloatArray]:
        """Footpoint arclength and distance for each point."""

    @cached_property
    def _normal_sign(self) -> float:
        if self.closed:
            s = np.linspace(0.0, self.length, 257)[:-1]
            pts = self.point(s)
            x, y = pts[:, 0], pts[:, 1]
            area = 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))
            return 1.0 if area > 0.0 else -1.0
        return -1.0 if self.flip else 1.0

    def normal(self, s: ArrayLike) -> FloatArray:
        """Unit normals: τ rotated by −90° (outward on closed curves)."""
        t = self.tangent(s)
        return self._normal_sign * np.stack([t[:, 1], -t[:, 0]], axis=-1)

    def sample(self, n: int) -> tuple[FloatArray, FloatArray]:
        """*n* arclengths (open: including both ends) and their points."""
        if self.closed:
            s = np.linspace(0.0, self.length, n + 1)[:-1]
        else:
            s = np.linspace(0.0, self.length, n)
        return s, self.point(s)

    def separation(self, s1: ArrayLike, s2: ArrayLike) -> FloatArray:
        """Arclength separation, cyclic on closed curves."""
        d = np.abs(np.asarray(s1, float) - np.asarray(s2, float))
        if self.closed:
            d = np.minimum(d, self.length - d)
        return d

    @cached_property
    def max_curvature(self) -> float:
        """``max |κ|`` over a dense sampling."""
        s, _ = self.sample(2001)
        return float(np.abs(self.curvature(s)).max())

    @cached_property
    def reach(self) -> float:
        """Sampled reach estimate.

        The smaller of the minimal curvature radius and half the smallest
        chord between points at least ``π·ρ`` apart along the curve.
        """
        rho = math.inf if self.max_curvature < 1e-12 else 1.0 / self.max_curvature
        half_chord = 0.5 * bottleneck(self, math.pi * min(rho, self.length))
        return min(rho, half_chord)


def bottleneck(curve: Curve, min_separation: float, samples: int = VALIDATION_SAMPLES) -> float:
    """Smallest chord between sampled points separated by at least *min_separation*."""
    s, pts = curve.sample(samples)
    sep = curve.separation(s[:, None], s[None, :])
    chords = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
    mask = sep >= min_separation
    if not np.any(mask):
        return math.inf
    return float(chords[mask].min())


class Segment(Curve):
    """Straight segment."""

    def __init__(self, p0: ArrayLike, p1: ArrayLike, *, flip: bool = False) -> None:
        self.p0 = np.asarray(p0, dtype=np.float64)
        self.p1 = np.asarray(p1, dtype=np.float64)
        self.length = float(np.linalg.norm(self.p1 - self.p0))
        self.closed = False
        self.flip = flip
        self._tau = (self.p1 - self.p0) / self.length

    def point(self, s: ArrayLike) -> FloatArray:
        sv = np.atleast_1d(np.asarray(s, dtype=np.float64))
        return self.p0 + sv[:, None] * self._tau

    def tangent(self, s: ArrayLike) -> FloatArray:
        sv = np.atleast_1d(np.asarray(s, dtype=np.float64))
        return np.broadcast_to(self._tau, (sv.size, 2)).copy()

    def curvature(self, s: ArrayLike) -> FloatArray:
        return np.zeros(np.atleast_1d(np.asarray(s)).size)

    def closest(self, points: ArrayLike) -> tuple[FloatArray, FloatArray]:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        s = np.clip((pts - self.p0) @ self._tau, 0.0, self.length)
        dist = np.linalg.norm(pts - self.point(s), axis=-1)
        return s, dist


class Arc(Curve):
    """Circular arc; a full 2π sweep is a closed circle."""

    def __init__(
        self,
        center: ArrayLike,
        radius: float,
        angle0: float,
        angle1: float,
        *,
        flip: bool = False,
    ) -> None:
        self.center = np.asarray(center, dtype=np.float64)
        self.radius = float(radius)
        self.angle0 = float(angle0)
        self.direction = 1.0 if angle1 > angle0 else -1.0
        self.sweep = abs(angle1 - angle0)
        self.closed = abs(self.sweep - 2.0 * math.pi) < 1e-12
        self.length = self.radius * self.sweep
        self.flip = flip

    def _angle(self, s: ArrayLike) -> FloatArray:
        sv = np.atleast_1d(np.asarray(s, dtype=np.float64))
        return self.angle0 + self.direction * sv / self.radius

    def point(self, s: ArrayLike) -> FloatArray:
        th = self._angle(s)
        return self.center + self.radius * np.stack([np.cos(th), np.sin(th)], axis=-1)

    def tangent(self, s: ArrayLike) -> FloatArray:
        th = self._angle(s)
        return self.direction * np.stack([-np.sin(th), np.cos(th)], axis=-1)

    def curvature(self, s: ArrayLike) -> FloatArray:
        n = np.atleast_1d(np.asarray(s)).size
        return np.full(n, self.direction / self.radius)

    def closest(self, points: ArrayLike) -> tuple[FloatArray, FloatArray]:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        rel = pts - self.center
        theta = np.arctan2(rel[:, 1], rel[:, 0])
        phi = np.mod(self.direction * (theta - self.angle0), 2.0 * math.pi)
        if self.closed:
            s = phi * self.radius
        else:
            inside = phi <= self.sweep
            s_in = phi * self.radius
            d_start = np.linalg.norm(pts - self.point(0.0), axis=-1)
            d_end = np.linalg.norm(pts - self.point(self.length), axis=-1)
            s_out = np.where(d_start <= d_end, 0.0, self.length)
            s = np.where(inside, s_in, s_out)
        s = np.clip(s, 0.0, self.length)
        dist = np.linalg.norm(pts - self.point(s), axis=-1)
        return s, dist


class Spline(Curve):
    """Cubic spline through control points, reparametrized by arclength."""

    _GAUSS = leggauss(10)

    def __init__(self, points: ArrayLike, *, closed: bool = False, flip: bool = False) -> None:
        ctrl = np.asarray(points, dtype=np.float64)
        if closed:
            if np.allclose(ctrl[0], ctrl[-1]):
                ctrl = ctrl.copy()
                ctrl[-1] = ctrl[0]
            else:
                ctrl = np.vstack([ctrl, ctrl[:1]])
        chords = np.linalg.norm(np.diff(ctrl, axis=0), axis=-1)
        if np.any(chords <= 0.0):
            msg = "spline control points must be distinct"
            raise InvalidInputError(msg)
        self.knots = np.concatenate([[0.0], np.cumsum(chords)])
        self._spline = CubicSpline(self.knots, ctrl, bc_type="periodic" if closed else "natural")
        self._d1 = self._spline.derivative(1)
        self._d2 = self._spline.derivative(2)
        self.closed = closed
        self.flip = flip
        self._cum = np.concatenate([[0.0], np.cumsum(self._piece_lengths())])
        self.length = float(self._cum[-1])

    def _speed(self, t: FloatArray) -> FloatArray:
        return np.linalg.norm(self._d1(t), axis=-1)

    def _piece_lengths(self) -> FloatArray:
        x, w = self._GAUSS
        a, b = self.knots[:-1], self.knots[1:]
        nodes = 0.5 * (b - a)[:, None] * (x + 1.0) + a[:, None]
        return 0.5 * (b - a) * (self._speed(nodes.ravel()).reshape(nodes.shape) @ w)

    def _s_of_t(self, t: FloatArray) -> FloatArray:
        x, w = self._GAUSS
        k = np.clip(np.searchsorted(self.knots, t, side="right") - 1, 0, len(self.knots) - 2)
        a = self.knots[k]
        nodes = 0.5 * (t - a)[:, None] * (x + 1.0) + a[:, None]
        partial = 0.5 * (t - a) * (self._speed(nodes.ravel()).reshape(nodes.shape) @ w)
        return self._cum[k] + partial

    def _t_of_s(self, s: ArrayLike) -> FloatArray:
        sv = np.atleast_1d(np.asarray(s, dtype=np.float64))
        t = np.interp(sv, self._cum, self.knots)
        for _ in range(_NEWTON_STEPS):
            step = (self._s_of_t(t) - sv) / self._speed(t)
            t = np.clip(t - step, self.knots[0], self.knots[-1])
            if np.max(np.abs(step)) < 1e-15 * self.knots[-1]:
                break
        return t

    def point(self, s: ArrayLike) -> FloatArray:
        return np.atleast_2d(self._spline(self._t_of_s(s)))

    def tangent(self, s: ArrayLike) -> FloatArray:
        d = np.atleast_2d(self._d1(self._t_of_s(s)))
        return d / np.linalg.norm(d, axis=-1, keepdims=True)

    def curvature(self, s: ArrayLike) -> FloatArray:
        t = self._t_of_s(s)
        d1, d2 = np.atleast_2d(self._d1(t)), np.atleast_2d(self._d2(t))
        cross = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        return cross / np.linalg.norm(d1, axis=-1) ** 3

    def closest(self, points: ArrayLike) -> tuple[FloatArray, FloatArray]:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        dense_t = np.linspace(self.knots[0], self.knots[-1], 64 * len(self.knots))
        _, idx = cKDTree(self._spline(dense_t)).query(pts)
        t = dense_t[idx]
        lo, hi = self.knots[0], self.knots[-1]
        for _ in range(_NEWTON_STEPS):
            diff = self._spline(t) - pts
            d1, d2 = self._d1(t), self._d2(t)
            g = np.sum(diff * d1, axis=-1)
            dg = np.sum(d1 * d1, axis=-1) + np.sum(diff * d2, axis=-1)
            step = g / np.where(dg > 0.0, dg, np.sum(d1 * d1, axis=-1))
            t = np.mod(t - step - lo, hi - lo) + lo if self.closed else np.clip(t - step, lo, hi)
            if np.max(np.abs(step)) < 1e-15 * (hi - lo):
                break
        s = np.clip(self._s_of_t(t), 0.0, self.length)
        dist = np.linalg.norm(pts - self._spline(t), axis=-1)
        return s, dist


def build_curve(spec: SegmentSpec | ArcSpec | SplineSpec) -> Curve:
    """Instantiate the curve described by *spec*."""
    match spec:
        case SegmentSpec():
            return Segment(spec.p0, spec.p1, flip=spec.flip_normal)
        case ArcSpec():
            return Arc(spec.center, spec.radius, spec.angle0, spec.angle1, flip=spec.flip_normal)
        case SplineSpec():
            return Spline(spec.points, closed=spec.closed, flip=spec.flip_normal)


# ---------------------------------------------------------------------------
# Domains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundaryPiece:
    """A boundary arc parametrized over ``t ∈ [0, 1]``.

    Closed pieces wrap around; open pieces include both end corners.
    """

    start: float
    stop: float
    closed: bool
    kind: Literal["circle", "line"]
    center: tuple[float, float] = (0.0, 0.0)
    radius: float = 0.0
    p0: tuple[float, float] = (0.0, 0.0)
    p1: tuple[float, float] = (0.0, 0.0)

    @property
    def length(self) -> float:
        """Arclength of the piece."""
        if self.kind == "circle":
            return self.radius * (self.stop - self.start)
        return math.dist(self.p0, self.p1)

    def at(self, t: ArrayLike) -> FloatArray:
        """Points at parameters *t*."""
        tv = np.atleast_1d(np.asarray(t, dtype=np.float64))
        if self.kind == "circle":
            th = self.start + tv * (self.stop - self.start)
            return np.asarray(self.center) + self.radius * np.stack(
                [np.cos(th), np.sin(th)], axis=-1
            )
        p0, p1 = np.asarray(self.p0), np.asarray(self.p1)
        return p0 + tv[:, None] * (p1 - p0)


class Domain(ABC):
    """Convex planar domain Ω."""

    @property
    @abstractmethod
    def area(self) -> float:
        """``|Ω|``."""

    @property
    @abstractmethod
    def perimeter(self) -> float:
        """``|∂Ω|``."""

    @abstractmethod
    def boundary_distance(self, points: ArrayLike) -> FloatArray:
        """Distance to ``∂Ω``, positive inside and negative outside."""

    @abstractmethod
    def project(self, point: ArrayLike) -> FloatArray:
        """Nearest boundary point."""

    @abstractmethod
    def pieces(self) -> list[BoundaryPiece]:
        """Boundary pieces in counter-clockwise order."""

    @abstractmethod
    def bounding_box(self) -> tuple[FloatArray, FloatArray]:
        """Lower-left and upper-right corners."""


class Disk(Domain):
    """Disk of given centre and radius."""

    def __init__(self, center: ArrayLike = (0.0, 0.0), radius: float = 1.0) -> None:
        self.center = np.asarray(center, dtype=np.float64)
        self.radius = float(radius)

    @property
    def area(self) -> float:
        return math.pi * self.radius**2

    @property
    def perimeter(self) -> float:
        return 2.0 * math.pi * self.radius

    def boundary_distance(self, points: ArrayLike) -> FloatArray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return self.radius - np.linalg.norm(pts - self.center, axis=-1)

    def project(self, point: ArrayLike) -> FloatArray:
        rel = np.asarray(point, dtype=np.float64) - self.center
        norm = float(np.linalg.norm(rel))
        direction = rel / norm if norm > 0.0 else np.array([1.0, 0.0])
        return self.center + self.radius * direction

    def pieces(self) -> list[BoundaryPiece]:
        c = (float(self.center[0]), float(self.center[1]))
        return [BoundaryPiece(0.0, 2.0 * math.pi, True, "circle", center=c, radius=self.radius)]

    def bounding_box(self) -> tuple[FloatArray, FloatArray]:
        return self.center - self.radius, self.center + self.radius


class Rectangle(Domain):
    """Axis-aligned rectangle."""

    def __init__(self, lower: ArrayLike, upper: ArrayLike) -> None:
        self.lower = np.asarray(lower, dtype=np.float64)
        self.upper = np.asarray(upper, dtype=np.float64)

    @property
    def area(self) -> float:
        w, h = self.upper - self.lower
        return float(w * h)

    @property
    def perimeter(self) -> float:
        w, h = self.upper - self.lower
        return float(2.0 * (w + h))

    def boundary_distance(self, points: ArrayLike) -> FloatArray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        gaps = np.concatenate([pts - self.lower, self.upper - pts], axis=-1)
        return gaps.min(axis=-1)

    def project(self, point: ArrayLike) -> FloatArray:
        p = np.clip(np.asarray(point, dtype=np.float64), self.lower, self.upper)
        gaps = np.array(
            [
                p[0] - self.lower[0],
                p[1] - self.lower[1],
                self.upper[0] - p[0],
                self.upper[1] - p[1],
            ]
        )
        side = int(np.argmin(gaps))
        q = p.copy()
        q[side % 2] = self.lower[side % 2] if side < 2 else self.upper[side % 2]
        return q

    def corners(self) -> FloatArray:
        """Corners in counter-clockwise order from the lower-left one."""
        (x0, y0), (x1, y1) = self.lower, self.upper
        return np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])

    def pieces(self) -> list[BoundaryPiece]:
        c = self.corners()
        out: list[BoundaryPiece] = []
        for a, b in zip(c, np.roll(c, -1, axis=0), strict=True):
            out.append(
                BoundaryPiece(
                    0.0,
                    1.0,
                    False,
                    "line",
                    p0=(float(a[0]), float(a[1])),
                    p1=(float(b[0]), float(b[1])),
                )
            )
        return out

    def bounding_box(self) -> tuple[FloatArray, FloatArray]:
        return self.lower.copy(), self.upper.copy()


def build_domain(spec: DiskSpec | RectangleSpec) -> Domain:
    """Instantiate the domain described by *spec*."""
    match spec:
        case DiskSpec():
            return Disk(spec.center, spec.radius)
        case RectangleSpec():
            return Rectangle(spec.lower, spec.upper)


# ---------------------------------------------------------------------------
# Tube
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TubeRegion:
    """``ω_ε = {x : d(x, σ0) < ε}`` with the end-trim exponent β for ``ω′_ε``."""

    curve: Curve
    half_width: float
    trim_exponent: float = DEFAULT_BETA

    def __post_init__(self) -> None:
        if self.half_width <= 0.0:
            msg = f"tube half-width must be positive, got {self.half_width}"
            raise InvalidInputError(msg)
        if not 0.0 < self.trim_exponent < 1.0:
            msg = f"trim exponent must lie in (0, 1), got {self.trim_exponent}"
            raise InvalidInputError(msg)

    @property
    def trim(self) -> float:
        """Endpoint trim ``ε^β`` (zero on closed spines)."""
        return 0.0 if self.curve.closed else self.half_width**self.trim_exponent

    def nominal_area(self) -> float:
        """``2εL`` plus the two half-disc caps of an open spine."""
        eps = self.half_width
        caps = 0.0 if self.curve.closed else math.pi * eps**2
        return 2.0 * eps * self.curve.length + caps

    def contains(self, points: ArrayLike) -> FloatArray:
        """Boolean mask of points inside the tube."""
        _, dist = self.curve.closest(points)
        return dist < self.half_width

    def in_trimmed(self, points: ArrayLike) -> FloatArray:
        """Mask of points of ``ω′_ε`` (tube points away from the spine ends)."""
        s, dist = self.curve.closest(points)
        trim = self.trim
        return (dist < self.half_width) & (s > trim) & (s < self.curve.length - trim)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def frame_at(curve: Curve, s: float) -> Frame:
    """Orthonormal frame at arclength *s*."""
    tol = 1e-12 * max(1.0, curve.length)
    if not -tol <= s <= curve.length + tol:
        msg = f"arclength {s} outside [0, {curve.length}]"
        raise InvalidInputError(msg)
    sc = min(max(s, 0.0), curve.length)
    n = curve.normal(sc)[0]
    t = curve.tangent(sc)[0]
    return Frame((float(n[0]), float(n[1])), (float(t[0]), float(t[1])))


@dataclass(frozen=True)
class GeometryCheck:
    """One admissibility condition and its outcome."""

    name: str
    ok: bool
    value: float
    bound: str

    def line(self) -> str:
        """Report line."""
        status = "ok" if self.ok else "VIOLATED"
        return f"{self.name:<18} {status:<9} value={self.value:.6g} required {self.bound}"


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of :func:`validate`."""

    checks: tuple[GeometryCheck, ...]

    @property
    def ok(self) -> bool:
        """Whether every condition holds."""
        return all(c.ok for c in self.checks)

    @property
    def violations(self) -> list[str]:
        """Report lines of the failed conditions."""
        return [c.line() for c in self.checks if not c.ok]

    def lines(self) -> list[str]:
        """All report lines, one per condition."""
        return [c.line() for c in self.checks]


def validate(curve: Curve, domain: Domain, K: float) -> ValidationReport:
    """Check the admissibility conditions for constant *K*.

    Distance from the spine to ``∂Ω`` at least ``1/K``, length within
    ``[1/K, K]``, and a sampled reach of at least ``1/K`` (curvature radius
    and bottleneck between points ``π/K`` apart along the spine).
    """
    inv_k = 1.0 / K
    _, pts = curve.sample(VALIDATION_SAMPLES)
    dist = float(domain.boundary_distance(pts).min())
    rho = math.inf if curve.max_curvature < 1e-12 else 1.0 / curve.max_curvature
    half_chord = 0.5 * bottleneck(curve, math.pi * inv_k)
    checks = (
        GeometryCheck("boundary_distance", dist >= inv_k, dist, f">= {inv_k:.6g}"),
        GeometryCheck(
            "length",
            inv_k <= curve.length <= K,
            curve.length,
            f"in [{inv_k:.6g}, {K:.6g}]",
        ),
        GeometryCheck("curvature_radius", rho >= inv_k, rho, f">= {inv_k:.6g}"),
        GeometryCheck("bottleneck", half_chord >= inv_k, half_chord, f">= {inv_k:.6g}"),
    )
    report = ValidationReport(checks)
    if not report.ok:
        log.warning("geometry_violations", violations=report.violations)
    return report


def tube_coordinates(curve: Curve, points: ArrayLike) -> tuple[FloatArray, FloatArray]:
    """Footpoint arclength ``s`` and signed offset ``h`` with ``x = x′ + h n(x′)``.

    Raises:
        OutsideReachError: when a point is at least the reach away from the
            spine, or lies in an end cap of an open spine where no footpoint
            reproduces it.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    s, dist = curve.closest(pts)
    if np.any(dist >= curve.reach):
        worst = float(dist.max())
        msg = f"point at distance {worst:.6g} is beyond the reach {curve.reach:.6g}"
        raise OutsideReachError(msg)
    foot = curve.point(s)
    normal = curve.normal(s)
    h = np.sum((pts - foot) * normal, axis=-1)
    residual = np.linalg.norm(foot + h[:, None] * normal - pts, axis=-1)
    if np.any(residual > ROUNDTRIP_TOL * max(1.0, curve.length)):
        msg = "point lies in an end cap; it has no tubular coordinates"
        raise OutsideReachError(msg)
    return s, h


def signed_tube_coordinates(curve: Curve, point: ArrayLike) -> tuple[float, float]:
    """Single-point form of :func:`tube_coordinates`."""
    s, h = tube_coordinates(curve, np.asarray(point, dtype=np.float64).reshape(1, 2))
    return float(s[0]), float(h[0])


@dataclass(frozen=True)
class CurveQuadrature:
    """Composite Gauss rule along a spine."""

    s: FloatArray
    points: FloatArray
    weights: FloatArray
    normals: FloatArray
    tangents: FloatArray

    def __len__(self) -> int:
        return int(self.s.size)

    def frames(self) -> list[Frame]:
        """Frame at each node."""
        return [
            Frame((float(n[0]), float(n[1])), (float(t[0]), float(t[1])))
            for n, t in zip(self.normals, self.tangents, strict=True)
        ]


def default_panels(curve: Curve) -> int:
    """Panel count giving about one panel per 0.05 of arclength."""
    return max(4, math.ceil(curve.length / 0.05))


def quadrature_nodes(
    curve: Curve, order: int, trim: float = 0.0, panels: int | None = None
) -> CurveQuadrature:
    """Composite Gauss–Legendre rule on ``[trim, L - trim]``.

    Closed spines have no ends, so *trim* is ignored for them.
    """
    if order < 1:
        msg = f"quadrature order must be at least 1, got {order}"
        raise InvalidInputError(msg)
    if curve.closed:
        trim = 0.0
    if not 0.0 <= trim < 0.5 * curve.length:
        msg = f"trim {trim} must lie in [0, L/2) with L = {curve.length}"
        raise InvalidInputError(msg)
    n_panels = panels if panels is not None else default_panels(curve)
    if n_panels < 1:
        msg = f"panel count must be at least 1, got {n_panels}"
        raise InvalidInputError(msg)
    x, w = leggauss(order)
    edges = np.linspace(trim, curve.length - trim, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    s = (mid[:, None] + half[:, None] * x).ravel()
    weights = (half[:, None] * w).ravel()
    return CurveQuadrature(
        s=s,
        points=curve.point(s),
        weights=weights,
        normals=curve.normal(s),
        tangents=curve.tangent(s),
    )
