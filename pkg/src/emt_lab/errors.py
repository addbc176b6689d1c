"""Exception hierarchy and the CLI exit-code / message mapping.

Every failure the lab can report is a :class:`LabError` subclass carrying the
exit code the command line returns for it. Input problems (bad JSON, bad
geometry, incompatible data) exit with 2, tensor admissibility failures with 3
and numerical breakdowns with 4.
"""

from __future__ import annotations

from typing import ClassVar

EXIT_OK = 0
EXIT_ACCEPTANCE = 1
EXIT_INPUT = 2
EXIT_TENSOR = 3
EXIT_NUMERICAL = 4


class LabError(Exception):
    """Base class for all lab failures."""

    exit_code: ClassVar[int] = EXIT_ACCEPTANCE


class InvalidInputError(LabError, ValueError):
    """Input that cannot be used as given (parse, range, unit-length checks)."""

    exit_code: ClassVar[int] = EXIT_INPUT


class GeometryError(InvalidInputError):
    """Base class for geometric failures."""


class GeometryViolationError(GeometryError):
    """The spine or tube violates an admissibility condition."""

    def __init__(self, message: str, violations: list[str] | None = None) -> None:
        super().__init__(message)
        self.violations = violations or []


class OutsideReachError(GeometryError):
    """A point lies farther from the spine than its tubular coordinates reach."""


class IncompatibleTractionError(InvalidInputError):
    """Neumann data does not balance force and torque."""

    def __init__(self, message: str, residuals: tuple[float, float, float]) -> None:
        super().__init__(message)
        self.residuals = residuals


class NormalizationError(InvalidInputError):
    """A measure does not have the normalization the operation requires."""


class PointOutsideMeshError(InvalidInputError):
    """An evaluation point is not covered by any element."""


class TensorError(LabError):
    """Base class for elasticity tensor admissibility failures."""

    exit_code: ClassVar[int] = EXIT_TENSOR


class NonConvexTensorError(TensorError):
    """The tensor is not strongly convex on symmetric matrices."""

    def __init__(self, message: str, margin: float) -> None:
        super().__init__(message)
        self.margin = margin


class AsymmetricTensorError(TensorError):
    """The Mandel matrix lacks major symmetry."""

    def __init__(self, message: str, residual: float) -> None:
        super().__init__(message)
        self.residual = residual


class SingularTensorError(TensorError):
    """The tensor cannot be inverted on symmetric matrices."""


class NumericalError(LabError):
    """Base class for numerical breakdowns."""

    exit_code: ClassVar[int] = EXIT_NUMERICAL


class MeshError(NumericalError):
    """Mesh generation produced an unusable triangulation."""


class SolverError(NumericalError):
    """Factorization or solve of the constrained system failed."""


_FALLBACK_MSG = "unexpected failure; rerun with LOG_LEVEL=DEBUG for details"

# Order matters: first match wins.
_PREFIXES: tuple[tuple[type[BaseException], str], ...] = (
    (GeometryError, "geometry violation"),
    (IncompatibleTractionError, "incompatible traction"),
    (InvalidInputError, "invalid input"),
    (NonConvexTensorError, "non-convex tensor"),
    (AsymmetricTensorError, "asymmetric tensor"),
    (TensorError, "tensor error"),
    (MeshError, "mesh failure"),
    (NumericalError, "numerical failure"),
)


def exit_code_for(exc: BaseException) -> int:
    """Return the CLI exit code for *exc*.

    Lab errors carry their own code; anything else is a numerical failure.
    """
    if isinstance(exc, LabError):
        return exc.exit_code
    return EXIT_NUMERICAL


def user_message(exc: BaseException) -> str:
    """Map an exception to a one-line message for stderr."""
    for exc_type, prefix in _PREFIXES:
        if isinstance(exc, exc_type):
            detail = str(exc) or exc_type.__name__
            return f"{prefix}: {detail}"
    return _FALLBACK_MSG
