"""Study configuration: one JSON or YAML file per convergence study.

JSON is a subset of YAML, so both formats load through the same path.
"""

from __future__ import annotations

from pathlib import Path
from typing import Annotated, Literal

import structlog
import yaml
from pydantic import BaseModel, ConfigDict, Field, model_validator

from emt_lab.config.validators import check_strictly_decreasing, check_symmetric_2x2
from emt_lab.errors import InvalidInputError, TensorError
from emt_lab.geometry import CurveSpec, DiskSpec, DomainSpec, Point2
from emt_lab.tensor_core import Tensor4, convexity_margin, make_isotropic

log = structlog.get_logger()

ConventionName = Literal["expansion", "constructive"]


class PhaseSpec(BaseModel):
    """One phase: Lamé pair or raw Mandel matrix."""

    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    lam: float | None = Field(default=None, alias="lambda", description="Lamé λ")
    mu: float | None = Field(default=None, description="Lamé μ")
    mandel: list[list[float]] | None = Field(default=None, description="3×3 Mandel matrix")

    @model_validator(mode="after")
    def _check_form(self) -> PhaseSpec:
        lame = self.lam is not None and self.mu is not None
        if lame == (self.mandel is not None) or (self.lam is None) != (self.mu is None):
            msg = 'a phase needs either "lambda" and "mu" or "mandel", not both'
            raise ValueError(msg)
        try:
            tensor = self.to_tensor()
        except TensorError as exc:
            raise ValueError(str(exc)) from exc
        margin = convexity_margin(tensor)
        if margin <= 0.0:
            msg = f"phase is not strongly convex (margin {margin:.4g})"
            raise ValueError(msg)
        return self

    def to_tensor(self) -> Tensor4:
        """Build the elasticity tensor."""
        if self.mandel is not None:
            return Tensor4.from_matrix(self.mandel)
        if self.lam is None or self.mu is None:
            msg = "phase has neither a Mandel matrix nor a Lamé pair"
            raise InvalidInputError(msg)
        return make_isotropic(self.lam, self.mu)


class PhasesSpec(BaseModel):
    """Background ``C0`` and inclusion ``C1``."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    background: PhaseSpec = Field(description="Background tensor C0")
    inclusion: PhaseSpec = Field(description="Inclusion tensor C1")


class ConstantStrainSpec(BaseModel):
    """``ψ = (C0 E) ν`` for a constant symmetric strain ``E``."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["constant_strain"] = "constant_strain"
    strain: list[list[float]] = Field(description="Symmetric 2×2 strain E")

    @model_validator(mode="after")
    def _check_strain(self) -> ConstantStrainSpec:
        check_symmetric_2x2(self.strain, "strain")
        return self


class PolynomialTractionSpec(BaseModel):
    """Traction components as monomial coefficient grids ``c[i][j] xⁱ yʲ``."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["polynomial"] = "polynomial"
    x: list[list[float]] = Field(description="Coefficients of ψ₁")
    y: list[list[float]] = Field(description="Coefficients of ψ₂")


TractionSpec = Annotated[
    ConstantStrainSpec | PolynomialTractionSpec, Field(discriminator="kind")
]


class MeshSpec(BaseModel):
    """Mesh sizes and element order."""

    model_config = ConfigDict(strict=True, extra="forbid")

    h: float = Field(default=0.05, gt=0.0, description="Background element size")
    tube_resolution: int = Field(default=2, ge=2, description="Element layers per ε")
    grading: float = Field(default=0.3, gt=0.0, description="Size growth per unit distance")
    order: Literal[1, 2] = Field(default=2, description="Lagrange element order")
    y_refinement: float = Field(
        default=4.0, ge=1.0, description="Size reduction factor at measurement points"
    )
    gradient_recovery: bool = Field(
        default=False, description="Patch-averaged gradients on σ0 (P1 only)"
    )

    @model_validator(mode="after")
    def _check_recovery(self) -> MeshSpec:
        if self.gradient_recovery and self.order != 1:
            msg = "gradient_recovery requires order 1"
            raise ValueError(msg)
        return self


class AcceptanceSpec(BaseModel):
    """Thresholds of a study; ``None`` disables a criterion."""

    model_config = ConfigDict(strict=True, extra="forbid")

    residual_slope_min: float | None = Field(
        default=1.2, description="Minimum fitted residual slope of the winning convention"
    )
    sign_discrimination: bool = Field(
        default=True, description="Losing convention must have larger residual at every ε"
    )
    h1_slope_min: float | None = Field(default=0.4, description="Lower H¹ slope bound")
    h1_slope_max: float | None = Field(default=0.6, description="Upper H¹ slope bound")
    l2_slope_min: float | None = Field(default=0.8, description="Minimum L² slope")
    representation_rel_tol: float | None = Field(
        default=0.02, description="Relative tolerance of the volume representation check"
    )
    quadrature_rel_tol: float = Field(
        default=1e-3, gt=0.0, description="Order-doubling tolerance of curve quadrature"
    )
    fit_points: int = Field(default=4, ge=2, description="Smallest ε values used in fits")


class OutputSpec(BaseModel):
    """Artifact file names, relative to the output directory."""

    model_config = ConfigDict(strict=True, extra="forbid")

    csv: str = Field(default="convergence.csv", description="Per-ε report")
    summary: str = Field(default="summary.json", description="Slopes and verdicts")


class StudyConfig(BaseModel):
    """A complete ε-convergence study."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = Field(default="study", description="Label used in logs and the summary")
    domain: DomainSpec = Field(default_factory=DiskSpec, description="Convex domain Ω")
    curve: CurveSpec = Field(description="Inclusion spine σ0")
    phases: PhasesSpec = Field(description="Phase tensors")
    traction: TractionSpec = Field(description="Boundary traction ψ")
    measure_points: list[Point2] = Field(min_length=1, description="Boundary points y")
    eps: list[float] = Field(min_length=1, description="Tube half-widths, decreasing")
    mesh: MeshSpec = Field(default_factory=MeshSpec, description="Mesh parameters")
    quad_order: int = Field(default=4, ge=1, description="Gauss points per panel on σ0")
    quad_panels: int | None = Field(default=None, ge=1, description="Panels on σ0")
    beta: float = Field(default=0.45, gt=0.0, lt=1.0, description="End-trim exponent")
    K: float = Field(default=10.0, gt=0.0, description="Admissibility constant of the spine")
    conventions: list[ConventionName] = Field(
        default_factory=lambda: ["expansion", "constructive"],
        min_length=1,
        description="Sign conventions compared by the study",
    )
    expected_convention: ConventionName | None = Field(
        default=None, description="Convention that must win, if set"
    )
    torque_correction: Literal["body_couple", "projected"] = Field(
        default="projected", description="How the Neumann load's torque is removed"
    )
    representation_eps: float | None = Field(
        default=None, description="ε of the representation check (default: largest)"
    )
    acceptance: AcceptanceSpec = Field(default_factory=AcceptanceSpec)
    output: OutputSpec = Field(default_factory=OutputSpec)
    seed: int = Field(default=0, description="Seed recorded with the run")

    @model_validator(mode="after")
    def _check_study(self) -> StudyConfig:
        check_strictly_decreasing(self.eps, "eps")
        if len(set(self.measure_points)) != len(self.measure_points):
            msg = "measure_points must be distinct"
            raise ValueError(msg)
        if len(set(self.conventions)) != len(self.conventions):
            msg = f"conventions must be distinct, got {self.conventions}"
            raise ValueError(msg)
        if self.expected_convention and self.expected_convention not in self.conventions:
            msg = f"expected_convention {self.expected_convention!r} is not compared"
            raise ValueError(msg)
        if self.representation_eps is not None and self.representation_eps not in self.eps:
            msg = f"representation_eps {self.representation_eps} is not in eps"
            raise ValueError(msg)
        return self

    @property
    def check_eps(self) -> float:
        """ε at which the representation identity is checked."""
        return self.representation_eps if self.representation_eps is not None else self.eps[0]


def load_study_config(path: Path) -> StudyConfig:
    """Load and validate a study file.

    Raises:
        FileNotFoundError: If the file does not exist.
        ValueError: If the file is not a mapping or fails validation.
    """
    raw = yaml.safe_load(path.read_text())
    if not isinstance(raw, dict):
        msg = f"{path}: expected a mapping, got {type(raw).__name__}"
        raise ValueError(msg)
    config = StudyConfig.model_validate(raw)
    log.debug("study_config_loaded", path=str(path), name=config.name, cases=len(config.eps))
    return config
