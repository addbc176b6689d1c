"""First-order boundary corrections and ε-convergence studies.

The correction of a thin inclusion around the spine σ0 is

    (u_ε − U)(y) ≈ 2ε ∫_σ0 M ∇̂U : ∇̂N(·, y) dσ,

evaluated with composite Gauss rules on σ0 and gradients taken from
inclusion-free solves. A study compares it against directly computed
differences for a decreasing sequence of ε and fits log-log slopes.
"""

from __future__ import annotations

import csv
import math
import time
from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field
from scipy.stats import linregress

from emt_lab.config.study import (
    ConstantStrainSpec,
    PolynomialTractionSpec,
    StudyConfig,
)
from emt_lab.emt import Convention, Frame, MomentTensor, moment_tensor
from emt_lab.errors import GeometryViolationError, MeshError, NormalizationError
from emt_lab.fem.assembly import (
    ConstantStrainTraction,
    Phases,
    PolynomialTraction,
    Traction,
)
from emt_lab.fem.elements import Space, build_space
from emt_lab.fem.field import FemField, element_strains, energy_norms, gradient_array
from emt_lab.fem.mesh import INCLUSION, Mesh, generate_mesh
from emt_lab.fem.solver import ConstrainedSystem, neumann_field, solve_cell, solve_neumann
from emt_lab.geometry import (
    Curve,
    CurveQuadrature,
    TubeRegion,
    build_curve,
    build_domain,
    quadrature_nodes,
    validate,
)
from emt_lab.metrics import study_case_duration, study_cases_total
from emt_lab.telemetry import get_tracer
from emt_lab.tensor_core import SQRT2, FloatArray, SymMat2, Tensor4, mandel_vectors

log = structlog.get_logger()
tracer = get_tracer(__name__)

PROBABILITY_TOL = 1e-12
DEFAULT_QUAD_ORDER = 4
DEFAULT_QUADRATURE_TOL = 1e-3

MomentField = Callable[[Frame], MomentTensor]
GradientField = Callable[[FloatArray], FloatArray]
"""Points ``(m, 2)`` to gradients ``(m, 2, 2)``."""
NeumannGradient = Callable[[FloatArray], FloatArray]
"""Points ``(m, 2)`` to gradients ``(2, m, 2, 2)``, one block per column ``k``."""


def phase_moment_field(
    c0: Tensor4, c1: Tensor4, convention: Convention = Convention.EXPANSION
) -> MomentField:
    """Moment field of a constant phase pair along any spine."""

    def moment_at(frame: Frame) -> MomentTensor:
        return moment_tensor(c0, c1, frame.normal, convention)

    return moment_at


def _moment_stack(moment_field: MomentField | MomentTensor, quad: CurveQuadrature) -> FloatArray:
    if isinstance(moment_field, MomentTensor):
        return np.broadcast_to(moment_field.tensor.mandel, (len(quad), 3, 3))
    return np.stack([moment_field(f).tensor.mandel for f in quad.frames()])


def _pairing(moments: FloatArray, grad_u: FloatArray, grad_n: FloatArray) -> FloatArray:
    """``(M ∇̂U) : ∇̂N_k`` per column ``k`` and node, shape ``(2, m)``."""
    gu = mandel_vectors(0.5 * (grad_u + np.swapaxes(grad_u, -1, -2)))
    gn = mandel_vectors(0.5 * (grad_n + np.swapaxes(grad_n, -1, -2)))
    return np.einsum("mij,mj,kmi->km", moments, gu, gn)


def first_order_correction(
    curve: Curve,
    moment_field: MomentField | MomentTensor,
    grad_u: GradientField,
    grad_n: NeumannGradient,
    eps: float,
    *,
    order: int = DEFAULT_QUAD_ORDER,
    panels: int | None = None,
    trim: float = 0.0,
) -> FloatArray:
    """``2ε Σ_q w_q (M ∇̂U) : ∇̂N_k`` at the Gauss nodes of σ0, one entry per ``k``."""
    quad = quadrature_nodes(curve, order, trim, panels)
    vals = _pairing(_moment_stack(moment_field, quad), grad_u(quad.points), grad_n(quad.points))
    return 2.0 * eps * (vals @ quad.weights)


@dataclass(frozen=True)
class CheckedCorrection:
    """Correction at doubled order with the change from the base order."""

    value: FloatArray
    coarse: FloatArray
    change: float
    converged: bool


def first_order_correction_checked(
    curve: Curve,
    moment_field: MomentField | MomentTensor,
    grad_u: GradientField,
    grad_n: NeumannGradient,
    eps: float,
    *,
    order: int = DEFAULT_QUAD_ORDER,
    panels: int | None = None,
    trim: float = 0.0,
    rel_tol: float = DEFAULT_QUADRATURE_TOL,
) -> CheckedCorrection:
    """:func:`first_order_correction` with an order-doubling convergence flag."""
    coarse = first_order_correction(
        curve, moment_field, grad_u, grad_n, eps, order=order, panels=panels, trim=trim
    )
    fine = first_order_correction(
        curve, moment_field, grad_u, grad_n, eps, order=2 * order, panels=panels, trim=trim
    )
    scale = float(np.linalg.norm(fine))
    change = 0.0 if scale == 0.0 else float(np.linalg.norm(fine - coarse)) / scale
    converged = change < rel_tol
    if not converged:
        log.warning("quadrature_not_converged", change=change, order=order, eps=eps)
    return CheckedCorrection(fine, coarse, change, converged)


@dataclass(frozen=True, eq=False)
class MeasurePoints:
    """Weighted points carrying moment tensors.

    ``arclength`` weights integrate along σ0 (total = its length);
    ``probability`` weights sum to one.
    """

    points: FloatArray
    weights: FloatArray
    moments: FloatArray
    normalization: Literal["probability", "arclength"] = "probability"

    def __post_init__(self) -> None:
        m = self.weights.shape[0]
        if self.points.shape != (m, 2) or self.moments.shape != (m, 3, 3):
            msg = "points, weights and moments must describe the same number of atoms"
            raise NormalizationError(msg)
        if m == 0 or np.any(self.weights <= 0.0):
            msg = "measure weights must be positive"
            raise NormalizationError(msg)

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    @classmethod
    def from_tube(
        cls,
        tube: TubeRegion,
        moment_field: MomentField | MomentTensor,
        *,
        order: int = DEFAULT_QUAD_ORDER,
        panels: int | None = None,
    ) -> MeasurePoints:
        """Arclength measure on the spine of *tube*, ends trimmed by ``ε^β``."""
        quad = quadrature_nodes(tube.curve, order, tube.trim, panels)
        return cls(
            quad.points,
            quad.weights,
            np.array(_moment_stack(moment_field, quad)),
            "arclength",
        )

    @classmethod
    def atoms(
        cls,
        points: Sequence[Sequence[float]],
        moments: Sequence[MomentTensor],
        weights: Sequence[float] | None = None,
    ) -> MeasurePoints:
        """Point masses, equally weighted unless *weights* are given."""
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        w = (
            np.full(pts.shape[0], 1.0 / pts.shape[0])
            if weights is None
            else np.asarray(weights, dtype=np.float64)
        )
        return cls(pts, w, np.stack([m.tensor.mandel for m in moments]), "probability")

    def normalized(self) -> MeasurePoints:
        """Probability measure with the same shape."""
        return MeasurePoints(self.points, self.weights / self.total_weight, self.moments)


def general_correction(
    measure: MeasurePoints,
    volume: float,
    grad_u: GradientField,
    grad_n: NeumannGradient,
) -> FloatArray:
    """``|ω| Σ_k w_k (M_k ∇̂U(x_k)) : ∇̂N(x_k)`` for a probability measure.

    Raises:
        NormalizationError: the measure is not a probability measure.
    """
    if measure.normalization != "probability" or abs(measure.total_weight - 1.0) > PROBABILITY_TOL:
        msg = (
            f"expected a probability measure, got {measure.normalization} "
            f"with total weight {measure.total_weight:.15g}"
        )
        raise NormalizationError(msg)
    vals = _pairing(measure.moments, grad_u(measure.points), grad_n(measure.points))
    return volume * (vals @ measure.weights)


# ---------------------------------------------------------------------------
# Volume integrals on the mesh
# ---------------------------------------------------------------------------


def _tube_average(field: FemField, mask: np.ndarray) -> FloatArray:
    strain, w = element_strains(field)
    total = float(w[mask].sum())
    return np.einsum("tq,tqi->i", w[mask], strain[mask]) / total


def raw_cell_average(
    space: Space,
    c0: Tensor4,
    c1: Tensor4,
    tube: TubeRegion,
    *,
    system: ConstrainedSystem | None = None,
) -> FloatArray:
    """Mandel matrix whose columns average ``(C1 − C0)∇̂v^{ij}`` over the trimmed tube.

    Raises:
        MeshError: no inclusion element lies in the trimmed tube.
    """
    mesh = space.mesh
    mask = (mesh.tags == INCLUSION) & tube.in_trimmed(mesh.centroids)
    if not np.any(mask):
        msg = "no inclusion elements inside the trimmed tube"
        raise MeshError(msg)
    contrast = (c1 - c0).mandel
    if np.linalg.norm(contrast) == 0.0:
        return np.zeros((3, 3))
    system = system or ConstrainedSystem(space, Phases(c0, c1))
    cols = []
    with tracer.start_as_current_span("cell.average"):
        for i, j, scale in ((0, 0, 1.0), (1, 1, 1.0), (0, 1, SQRT2)):
            v = solve_cell(space, c0, c1, i, j, system=system)
            cols.append(scale * contrast @ _tube_average(v, mask))
    return np.column_stack(cols)


def cell_average_moment(
    space: Space,
    c0: Tensor4,
    c1: Tensor4,
    tube: TubeRegion,
    *,
    system: ConstrainedSystem | None = None,
) -> Tensor4:
    """Numerical moment tensor (expansion convention) from the three cell problems."""
    raw = raw_cell_average(space, c0, c1, tube, system=system)
    asym = float(np.linalg.norm(raw - raw.T))
    scale = max(float(np.linalg.norm(raw)), np.finfo(float).tiny)
    log.info("cell_average_moment", eps=tube.half_width, asymmetry=asym / scale)
    return Tensor4.from_matrix(raw, symmetrize=True)


def representation_integral(phases: Phases, u_eps: FemField, n_col: FemField) -> float:
    """``∫_ω (C0 − C1) ∇̂u_ε : ∇̂N_k`` over the inclusion elements."""
    if u_eps.space is not n_col.space:
        msg = "representation integral needs fields on the same space"
        raise MeshError(msg)
    su, w = element_strains(u_eps)
    sn, _ = element_strains(n_col)
    mask = u_eps.space.mesh.tags == INCLUSION
    diff = -phases.contrast.mandel
    return float(np.einsum("tq,ij,tqj,tqi->", w[mask], diff, su[mask], sn[mask]))


# ---------------------------------------------------------------------------
# Fits
# ---------------------------------------------------------------------------


class SlopeFit(BaseModel):
    """Least-squares line through ``(log x, log y)``."""

    model_config = ConfigDict(frozen=True)

    slope: float = Field(description="Fitted exponent")
    stderr: float = Field(description="Standard error of the slope")
    intercept: float = Field(description="Intercept in log space")
    fit_residual: float = Field(description="RMS deviation from the line in log space")
    points: int = Field(description="Number of samples in the fit")


def fit_slope(x: Sequence[float], y: Sequence[float]) -> SlopeFit | None:
    """Log-log slope, or ``None`` when fewer than two positive samples exist."""
    xa, ya = np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
    if xa.size < 2 or np.any(xa <= 0.0) or np.any(ya <= 0.0):
        return None
    lx, ly = np.log(xa), np.log(ya)
    res = linregress(lx, ly)
    fitted = res.intercept + res.slope * lx
    return SlopeFit(
        slope=float(res.slope),
        stderr=float(res.stderr),
        intercept=float(res.intercept),
        fit_residual=float(np.sqrt(np.mean((ly - fitted) ** 2))),
        points=int(xa.size),
    )


# ---------------------------------------------------------------------------
# Study
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StudyRow:
    """One (ε, y) sample of a study."""

    eps: float
    point: int
    area: float
    lhs: FloatArray
    rhs_exp: FloatArray
    rhs_neg: FloatArray
    l2_diff: float
    h1_diff: float
    quadrature_change: float
    quadrature_converged: bool
    representation: FloatArray | None = None

    @property
    def resid_exp(self) -> float:
        return float(np.linalg.norm(self.lhs - self.rhs_exp))

    @property
    def resid_neg(self) -> float:
        return float(np.linalg.norm(self.lhs - self.rhs_neg))

    def residual(self, convention: Convention) -> float:
        """Residual against the right side of *convention*."""
        return self.resid_exp if convention is Convention.EXPANSION else self.resid_neg


@dataclass(frozen=True)
class CaseResult:
    """All rows of one ε together with mesh counts."""

    eps: float
    rows: list[StudyRow]
    mesh: dict[str, float] = field(default_factory=dict)
    fields: dict[str, FemField] = field(default_factory=dict)


def build_traction(spec: ConstantStrainSpec | PolynomialTractionSpec, c0: Tensor4) -> Traction:
    """Instantiate the traction of a study."""
    match spec:
        case ConstantStrainSpec():
            return ConstantStrainTraction(c0, SymMat2.from_matrix(spec.strain))
        case PolynomialTractionSpec():
            return PolynomialTraction.from_lists(spec.x, spec.y)


def check_geometry(config: StudyConfig, eps: float | None = None) -> None:
    """Spine admissibility and ``ε < reach`` for *eps* (default: every case).

    Raises:
        GeometryViolationError: with one message per failed check.
    """
    curve = build_curve(config.curve)
    domain = build_domain(config.domain)
    report = validate(curve, domain, config.K)
    violations = list(report.violations)
    largest = config.eps[0] if eps is None else eps
    if largest >= curve.reach:
        violations.append(f"eps {largest} is not below the spine reach {curve.reach:.4g}")
    trim = 0.0 if curve.closed else largest**config.beta
    if 2.0 * trim >= curve.length:
        violations.append(
            f"end trim eps^beta = {trim:.4g} leaves nothing of a spine of length "
            f"{curve.length:.4g}"
        )
    if violations:
        raise GeometryViolationError("; ".join(violations), violations)


def run_case(config: StudyConfig, eps: float, *, keep_fields: bool = False) -> CaseResult:
    """Mesh, solve and compare both sides of the expansion at one ε.

    With *keep_fields* the background and perturbed displacements are returned too.
    """
    start = time.monotonic()
    outcome = "error"
    try:
        with tracer.start_as_current_span("study.case") as span:
            span.set_attribute("study.eps", eps)
            result = _run_case(config, eps, keep_fields=keep_fields)
        outcome = "ok"
        return result
    finally:
        study_cases_total.add(1, {"outcome": outcome})
        study_case_duration.record(time.monotonic() - start)


def study_tube(config: StudyConfig, eps: float) -> TubeRegion:
    """Tube of half-width *eps* around the study's spine."""
    return TubeRegion(build_curve(config.curve), eps, config.beta)


def study_mesh(config: StudyConfig, tube: TubeRegion | None) -> Mesh:
    """Mesh of a study's domain, resolving *tube* when given."""
    domain = build_domain(config.domain)
    return generate_mesh(
        domain,
        tube,
        config.mesh.h,
        tube_resolution=config.mesh.tube_resolution,
        grading=config.mesh.grading,
        refine_points=config.measure_points,
        refine_factor=config.mesh.y_refinement,
    )


def _run_case(config: StudyConfig, eps: float, *, keep_fields: bool) -> CaseResult:
    tube = study_tube(config, eps)
    curve = tube.curve
    mesh = study_mesh(config, tube)
    space = build_space(mesh, config.mesh.order)
    c0 = config.phases.background.to_tensor()
    c1 = config.phases.inclusion.to_tensor()
    phases = Phases(c0, c1)
    sys0 = ConstrainedSystem(space, Phases.homogeneous(c0))
    sys_eps = ConstrainedSystem(space, phases)
    traction = build_traction(config.traction, c0)
    u_bg = solve_neumann(space, sys0.phases, traction, system=sys0)
    u_eps = solve_neumann(space, phases, traction, system=sys_eps)
    l2, h1 = energy_norms(u_eps, u_bg)
    recovery = config.mesh.gradient_recovery

    def grad_u(pts: FloatArray) -> FloatArray:
        return gradient_array(u_bg, pts, recovery=recovery)

    moments = phase_moment_field(c0, c1, Convention.EXPANSION)
    check_rep = math.isclose(eps, config.check_eps)
    rows: list[StudyRow] = []
    for idx, y in enumerate(config.measure_points):
        node = mesh.find_boundary_node(y)
        cols = [
            neumann_field(
                space, c0, y, k, torque_correction=config.torque_correction, system=sys0
            )
            for k in (0, 1)
        ]

        def grad_n(pts: FloatArray, cols: list[FemField] = cols) -> FloatArray:
            return np.stack([gradient_array(c, pts, recovery=recovery) for c in cols])

        corr = first_order_correction_checked(
            curve,
            moments,
            grad_u,
            grad_n,
            eps,
            order=config.quad_order,
            panels=config.quad_panels,
            trim=tube.trim,
            rel_tol=config.acceptance.quadrature_rel_tol,
        )
        lhs = (u_eps - u_bg).at_node(node)
        rep = None
        if check_rep:
            # the volume identity needs a load that pairs to zero with H̃ fields
            rep_cols = cols
            if config.torque_correction != "body_couple":
                rep_cols = [
                    neumann_field(space, c0, y, k, torque_correction="body_couple", system=sys0)
                    for k in (0, 1)
                ]
            rep = np.array([representation_integral(phases, u_eps, c) for c in rep_cols])
        rows.append(
            StudyRow(
                eps=eps,
                point=idx,
                area=mesh.inclusion_area,
                lhs=lhs,
                rhs_exp=corr.value,
                rhs_neg=-corr.value,
                l2_diff=l2,
                h1_diff=h1,
                quadrature_change=corr.change,
                quadrature_converged=corr.converged,
                representation=rep,
            )
        )
    log.info(
        "study_case_done",
        eps=eps,
        nodes=mesh.n_nodes,
        area=mesh.inclusion_area,
        nominal_area=tube.nominal_area(),
        h1=h1,
        l2=l2,
    )
    fields = {"background": u_bg, "perturbed": u_eps} if keep_fields else {}
    return CaseResult(eps, rows, mesh.summary(), fields)


class Criterion(BaseModel):
    """Verdict of one acceptance criterion; ``passed`` is ``None`` when undefined."""

    model_config = ConfigDict(frozen=True)

    passed: bool | None = Field(description="Outcome, None when undefined or disabled")
    value: float | str | None = Field(default=None, description="Measured value")
    threshold: float | str | None = Field(default=None, description="Required value")
    detail: str = Field(default="", description="Explanation")


class StudySummary(BaseModel):
    """Slopes and verdicts written as the JSON summary."""

    model_config = ConfigDict(frozen=True)

    name: str
    seed: int
    eps: list[float]
    winner: str | None
    degenerate: bool
    residual_slopes: dict[str, list[SlopeFit | None]]
    h1_slope: SlopeFit | None
    l2_slope: SlopeFit | None
    criteria: dict[str, Criterion]
    notes: list[str]
    passed: bool


CSV_COLUMNS = (
    "eps",
    "point",
    "area",
    "lhs_x",
    "lhs_y",
    "rhs_exp_x",
    "rhs_exp_y",
    "rhs_neg_x",
    "rhs_neg_y",
    "resid_exp",
    "resid_neg",
    "l2_diff",
    "h1_diff",
)


def write_rows_csv(rows: Sequence[StudyRow], path: Path) -> None:
    """Write one line per (ε, point) with the columns of :data:`CSV_COLUMNS`.

    Floats are written with ``repr`` so repeated runs compare byte for byte.
    """
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in rows:
            values = [
                r.eps,
                r.area,
                *r.lhs,
                *r.rhs_exp,
                *r.rhs_neg,
                r.resid_exp,
                r.resid_neg,
                r.l2_diff,
                r.h1_diff,
            ]
            cells = [repr(float(v)) for v in values]
            writer.writerow([cells[0], r.point, *cells[1:]])


@dataclass(frozen=True)
class ConvergenceReport:
    """Rows of every case in ε order plus the evaluated summary."""

    cases: list[CaseResult]
    summary: StudySummary

    @property
    def rows(self) -> list[StudyRow]:
        return [row for case in self.cases for row in case.rows]

    @property
    def passed(self) -> bool:
        return self.summary.passed

    def write_csv(self, path: Path) -> None:
        write_rows_csv(self.rows, path)

    def write_summary(self, path: Path) -> None:
        path.write_text(self.summary.model_dump_json(indent=2) + "\n")


def _winner(rows: list[StudyRow], conventions: list[Convention]) -> Convention | None:
    totals = {c: sum(r.residual(c) for r in rows) for c in conventions}
    if all(t == 0.0 for t in totals.values()):
        return None
    return min(conventions, key=lambda c: (totals[c], conventions.index(c)))


def summarize(config: StudyConfig, cases: list[CaseResult]) -> StudySummary:
    """Fit slopes and evaluate every enabled acceptance criterion."""
    acc = config.acceptance
    conventions = [Convention(c) for c in config.conventions]
    rows = [r for case in cases for r in case.rows]
    fit_cases = cases[-acc.fit_points :]
    fit_eps = [c.eps for c in fit_cases]
    winner = _winner(rows, conventions)
    degenerate = winner is None
    notes: list[str] = []
    if degenerate:
        notes.append("degenerate: all residuals zero")
    if len(fit_cases) < acc.fit_points:
        notes.append(f"only {len(fit_cases)} ε values available for fits")

    slopes: dict[str, list[SlopeFit | None]] = {}
    for conv in conventions:
        slopes[conv.value] = [
            fit_slope(fit_eps, [c.rows[p].residual(conv) for c in fit_cases])
            for p in range(len(config.measure_points))
        ]
    h1 = fit_slope(fit_eps, [c.rows[0].h1_diff for c in fit_cases])
    l2 = fit_slope(fit_eps, [c.rows[0].l2_diff for c in fit_cases])

    criteria: dict[str, Criterion] = {}
    if acc.residual_slope_min is not None:
        criteria["residual_slope"] = _slope_criterion(
            slopes[winner.value] if winner else [], acc.residual_slope_min, degenerate
        )
    if acc.sign_discrimination and len(conventions) == 2 and winner is not None:
        loser = next(c for c in conventions if c is not winner)
        ok = all(r.residual(loser) > r.residual(winner) for r in rows)
        criteria["sign_discrimination"] = Criterion(
            passed=ok, value=winner.value, detail=f"{loser.value} residual larger at every ε"
        )
    if acc.h1_slope_min is not None or acc.h1_slope_max is not None:
        lo = acc.h1_slope_min if acc.h1_slope_min is not None else -math.inf
        hi = acc.h1_slope_max if acc.h1_slope_max is not None else math.inf
        criteria["h1_slope"] = Criterion(
            passed=None if h1 is None else lo <= h1.slope <= hi,
            value=None if h1 is None else h1.slope,
            threshold=f"[{lo}, {hi}]",
        )
    if acc.l2_slope_min is not None:
        criteria["l2_slope"] = Criterion(
            passed=None if l2 is None else l2.slope >= acc.l2_slope_min,
            value=None if l2 is None else l2.slope,
            threshold=acc.l2_slope_min,
        )
    if acc.representation_rel_tol is not None:
        criteria["representation"] = _representation_criterion(rows, acc.representation_rel_tol)
    criteria["quadrature"] = Criterion(
        passed=all(r.quadrature_converged for r in rows),
        value=max(r.quadrature_change for r in rows),
        threshold=acc.quadrature_rel_tol,
    )
    if config.expected_convention is not None:
        criteria["expected_convention"] = Criterion(
            passed=None if winner is None else winner.value == config.expected_convention,
            value=None if winner is None else winner.value,
            threshold=config.expected_convention,
        )
    passed = all(c.passed is not False for c in criteria.values())
    return StudySummary(
        name=config.name,
        seed=config.seed,
        eps=[c.eps for c in cases],
        winner=None if winner is None else winner.value,
        degenerate=degenerate,
        residual_slopes=slopes,
        h1_slope=h1,
        l2_slope=l2,
        criteria=criteria,
        notes=notes,
        passed=passed,
    )


def _slope_criterion(fits: list[SlopeFit | None], minimum: float, degenerate: bool) -> Criterion:
    if degenerate or not fits or any(f is None for f in fits):
        return Criterion(passed=None, threshold=minimum, detail="slope undefined")
    worst = min(f.slope for f in fits if f is not None)
    return Criterion(passed=worst >= minimum, value=worst, threshold=minimum)


def _representation_criterion(rows: list[StudyRow], tol: float) -> Criterion:
    errors: list[float] = []
    for r in rows:
        if r.representation is None:
            continue
        scale = float(np.linalg.norm(r.lhs))
        if scale == 0.0:
            continue
        errors.append(float(np.linalg.norm(r.lhs - r.representation)) / scale)
    if not errors:
        return Criterion(passed=None, threshold=tol, detail="no nonzero difference to compare")
    worst = max(errors)
    return Criterion(passed=worst <= tol, value=worst, threshold=tol)


def convergence_study(config: StudyConfig, *, jobs: int = 1) -> ConvergenceReport:
    """Run every ε of *config*, in parallel across cases when ``jobs > 1``.

    Raises:
        GeometryViolationError: the spine or the largest ε is inadmissible.
    """
    check_geometry(config)
    with tracer.start_as_current_span("study.run") as span:
        span.set_attribute("study.cases", len(config.eps))
        log.info("study_started", name=config.name, eps=config.eps, jobs=jobs)
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                cases = list(pool.map(run_case, [config] * len(config.eps), config.eps))
        else:
            cases = [run_case(config, eps) for eps in config.eps]
        summary = summarize(config, cases)
    log.info("study_finished", name=config.name, winner=summary.winner, passed=summary.passed)
    return ConvergenceReport(cases, summary)
