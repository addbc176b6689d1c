"""Elastic moment tensor of a thin inclusion from the transmission conditions.

Across the interface of a thin strip with normal ``n`` the tangential strain
is continuous and the normal traction balances. With ``D = C0 - C1`` the
interior strain is ``e_int = e_ext + δ⊗n + n⊗δ`` where
``δ = ½ q((D e_ext) n)`` and ``q`` inverts ``ζ ↦ (C1 (ζ⊗n)) n``.
The constructive tensor is then

    M̃ h = D h + D sym(q((D h) n) ⊗ n),

and ``(C0 - C1) e_int = M̃ e_ext``. The expansion convention reports
``T = -M̃`` so that ``(C1 - C0) e_int = T e_ext``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import StrEnum
from typing import NamedTuple

import numpy as np
import structlog
from numpy.typing import ArrayLike

from emt_lab.errors import InvalidInputError, NonConvexTensorError
from emt_lab.tensor_core import (
    FloatArray,
    SymMat2,
    Tensor4,
    compose_matrix,
    convexity_margin,
    invert,
    mandel_vectors,
)

log = structlog.get_logger()

UNIT_TOL = 1e-12
CONTRAST_TOL = 1e-13
BOUNDS_SLACK = 1e-10


class Convention(StrEnum):
    """Sign convention of a moment tensor."""

    EXPANSION = "expansion"
    CONSTRUCTIVE = "constructive"

    @property
    def sign(self) -> float:
        """Factor applied to the constructive tensor ``M̃``."""
        return -1.0 if self is Convention.EXPANSION else 1.0


@dataclass(frozen=True)
class Frame:
    """Orthonormal frame ``(n, τ)`` at a point of the spine."""

    n: tuple[float, float]
    tau: tuple[float, float]

    def __post_init__(self) -> None:
        n, t = np.asarray(self.n, float), np.asarray(self.tau, float)
        if abs(np.linalg.norm(n) - 1.0) > UNIT_TOL or abs(np.linalg.norm(t) - 1.0) > UNIT_TOL:
            msg = f"frame vectors must be unit length: n={self.n}, tau={self.tau}"
            raise InvalidInputError(msg)
        if abs(float(n @ t)) > UNIT_TOL:
            msg = f"frame vectors must be orthogonal: n·τ={float(n @ t):.3e}"
            raise InvalidInputError(msg)

    @classmethod
    def from_normal(cls, n: ArrayLike) -> Frame:
        """Frame whose normal is *n* and tangent is *n* rotated by +90°."""
        vec = check_unit(n)
        return cls((float(vec[0]), float(vec[1])), (float(-vec[1]), float(vec[0])))

    @classmethod
    def from_tangent(cls, tau: ArrayLike) -> Frame:
        """Frame whose normal is *tau* rotated by −90°."""
        t = check_unit(tau)
        return cls((float(t[1]), float(-t[0])), (float(t[0]), float(t[1])))

    @property
    def normal(self) -> FloatArray:
        """``n`` as an array."""
        return np.asarray(self.n, dtype=np.float64)

    @property
    def tangent(self) -> FloatArray:
        """``τ`` as an array."""
        return np.asarray(self.tau, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class MomentTensor:
    """A moment tensor tagged with its sign convention."""

    tensor: Tensor4
    convention: Convention = field(default=Convention.EXPANSION)

    def as_convention(self, convention: Convention) -> MomentTensor:
        """Same tensor expressed in *convention*."""
        if convention is self.convention:
            return self
        return MomentTensor(-self.tensor, convention)


class TransmissionResult(NamedTuple):
    """Interior strain and interface jump vector."""

    e_int: SymMat2
    delta: FloatArray


class BoundsReport(NamedTuple):
    """Verdicts and values of ``lower ≤ T E:E ≤ upper``."""

    lower_ok: bool
    upper_ok: bool
    lower: float
    value: float
    upper: float


class IsotropicCoefficients(NamedTuple):
    """Coefficients of ``a tr(h) I + b h + c (hτ·τ) τ⊗τ + d (hn·n) n⊗n``."""

    a: float
    b: float
    c: float
    d: float


def check_unit(n: ArrayLike) -> FloatArray:
    """Return *n* as an array, rejecting non-unit vectors."""
    vec = np.asarray(n, dtype=np.float64)
    if vec.shape != (2,):
        msg = f"normal must be a 2-vector, got shape {vec.shape}"
        raise InvalidInputError(msg)
    if abs(float(np.linalg.norm(vec)) - 1.0) > UNIT_TOL:
        msg = f"normal must have unit length, got |n|={float(np.linalg.norm(vec)):.12g}"
        raise InvalidInputError(msg)
    return vec


def require_convex(c: Tensor4, name: str) -> float:
    """Return the convexity margin of *c*, raising if it is not positive."""
    margin = convexity_margin(c)
    if margin <= 0.0:
        msg = f"{name} is not strongly convex (margin {margin:.3e})"
        raise NonConvexTensorError(msg, margin)
    return margin


def _normal_embedding(n: FloatArray) -> FloatArray:
    """3×2 matrix ``P`` with columns ``mandel(sym(e_a ⊗ n))``.

    ``P v`` is the Mandel vector of ``sym(v⊗n)`` and ``Pᵀ s`` the vector
    ``S n`` for a symmetric ``S`` in Mandel form.
    """
    outer = np.einsum("ai,j->aij", np.eye(2), n)
    return mandel_vectors(outer).T


def q_inverse(c1: Tensor4, n: ArrayLike) -> FloatArray:
    """``Q`` with ``Q ζ · ξ = C1 (ζ⊗n) : (ξ⊗n)``; symmetric positive definite."""
    vec = check_unit(n)
    require_convex(c1, "C1")
    p = _normal_embedding(vec)
    q_inv = p.T @ c1.mandel @ p
    return 0.5 * (q_inv + q_inv.T)


def q_matrix(c1: Tensor4, n: ArrayLike) -> FloatArray:
    """The operator ``q``, inverse of :func:`q_inverse`."""
    q = np.linalg.inv(q_inverse(c1, n))
    return 0.5 * (q + q.T)


def transmission_solve(
    c0: Tensor4, c1: Tensor4, n: ArrayLike, e_ext: SymMat2
) -> TransmissionResult:
    """Interior strain of a laminate interface with exterior strain *e_ext*.

    The traction ``C1 e_int n`` equals ``C0 e_ext n`` and
    ``e_int - e_ext = δ⊗n + n⊗δ``.
    """
    vec = check_unit(n)
    require_convex(c0, "C0")
    q = q_matrix(c1, vec)
    p = _normal_embedding(vec)
    d = c0.mandel - c1.mandel
    delta = 0.5 * q @ (p.T @ d @ e_ext.to_mandel())
    jump = SymMat2.outer_sym(delta, vec) * 2.0
    return TransmissionResult(e_int=e_ext + jump, delta=delta)


def transmission_residual(c0: Tensor4, c1: Tensor4, n: ArrayLike, e_ext: SymMat2) -> float:
    """``|C1 e_int n - C0 e_ext n|`` for the solved interior strain."""
    vec = check_unit(n)
    e_int = transmission_solve(c0, c1, vec, e_ext).e_int
    p = _normal_embedding(vec)
    t_int = p.T @ c1.mandel @ e_int.to_mandel()
    t_ext = p.T @ c0.mandel @ e_ext.to_mandel()
    return float(np.linalg.norm(t_int - t_ext))


def moment_tensor(
    c0: Tensor4,
    c1: Tensor4,
    n: ArrayLike,
    convention: Convention = Convention.EXPANSION,
) -> MomentTensor:
    """Moment tensor of a thin inclusion with normal *n*.

    Identical phases (``|C1 - C0|`` below ``CONTRAST_TOL``) give exactly zero.
    """
    vec = check_unit(n)
    require_convex(c0, "C0")
    require_convex(c1, "C1")
    d = c0.mandel - c1.mandel
    if np.linalg.norm(d) < CONTRAST_TOL:
        return MomentTensor(Tensor4.zero(), convention)
    p = _normal_embedding(vec)
    m_tilde = d + d @ p @ q_matrix(c1, vec) @ p.T @ d
    m_tilde = 0.5 * (m_tilde + m_tilde.T)
    return MomentTensor(Tensor4(convention.sign * m_tilde), convention)


def isotropic_moment_coeffs(
    lam0: float, mu0: float, lam1: float, mu1: float
) -> IsotropicCoefficients:
    """The closed-form coefficients as printed for isotropic phases.

    The shear coefficients ``b`` and ``c`` of this form agree with
    :func:`moment_tensor` only when ``μ0 = μ1``; use
    :func:`isotropic_moment_coeffs_consistent` to reproduce the constructive
    tensor for general Lamé pairs.
    """
    _check_lame(lam0, mu0, "background")
    _check_lame(lam1, mu1, "inclusion")
    dl, dm = lam0 - lam1, mu0 - mu1
    p_wave = lam1 + 2.0 * mu1
    a = dl * (lam0 + 2.0 * mu0) / p_wave
    b = dm * mu0 / mu1
    c = (
        dm
        * (2.0 * lam1 * (mu1 - mu0) + mu1 * (lam1 - lam0) + 2.0 * mu1 * (mu1 - mu0))
        / (mu1 * p_wave)
    )
    d = 2.0 * dm * (mu1 * lam0 - lam1 * mu0) / (mu1 * p_wave)
    return IsotropicCoefficients(a, b, c, d)


def isotropic_moment_coeffs_consistent(
    lam0: float, mu0: float, lam1: float, mu1: float
) -> IsotropicCoefficients:
    """Closed-form coefficients that reproduce the constructive tensor exactly."""
    _check_lame(lam0, mu0, "background")
    _check_lame(lam1, mu1, "inclusion")
    dl, dm = lam0 - lam1, mu0 - mu1
    p_wave = lam1 + 2.0 * mu1
    a = dl * (lam0 + 2.0 * mu0) / p_wave
    b = 2.0 * dm * mu0 / mu1
    c = 2.0 * dm * ((mu1 - mu0) * p_wave + mu1 * (lam1 - lam0)) / (mu1 * p_wave)
    d = 2.0 * dm * (mu1 * lam0 - lam1 * mu0) / (mu1 * p_wave)
    return IsotropicCoefficients(a, b, c, d)


def isotropic_moment_tensor(coeffs: IsotropicCoefficients, n: ArrayLike) -> Tensor4:
    """Tensor of ``h ↦ a tr(h) I + b h + c (hτ·τ) τ⊗τ + d (hn·n) n⊗n``."""
    frame = Frame.from_normal(n)
    identity = mandel_vectors(np.eye(2))
    tt = mandel_vectors(np.outer(frame.tangent, frame.tangent))
    nn = mandel_vectors(np.outer(frame.normal, frame.normal))
    m = (
        coeffs.a * np.outer(identity, identity)
        + coeffs.b * np.eye(3)
        + coeffs.c * np.outer(tt, tt)
        + coeffs.d * np.outer(nn, nn)
    )
    return Tensor4(m)


def _check_lame(lam: float, mu: float, name: str) -> None:
    if mu <= 0.0 or lam + mu <= 0.0:
        margin = min(2.0 * mu, 2.0 * (lam + mu))
        msg = f"{name} Lamé pair (λ={lam}, μ={mu}) is not strongly convex"
        raise NonConvexTensorError(msg, margin)


def bounds_check(c0: Tensor4, c1: Tensor4, m: MomentTensor, e: SymMat2) -> BoundsReport:
    """Evaluate ``C0 C1⁻¹ (C1 - C0) E:E ≤ T E:E ≤ (C1 - C0) E:E``.

    *m* is converted to the expansion convention first. Violations are logged,
    not raised.
    """
    t = m.as_convention(Convention.EXPANSION).tensor
    ev = e.to_mandel()
    lower_op = compose_matrix(c0, invert(c1), c1 - c0)
    lower = float(ev @ lower_op @ ev)
    value = float(ev @ t.mandel @ ev)
    upper = float(ev @ (c1 - c0).mandel @ ev)
    scale = BOUNDS_SLACK * max(1.0, abs(lower), abs(upper))
    report = BoundsReport(
        lower_ok=lower <= value + scale,
        upper_ok=value <= upper + scale,
        lower=lower,
        value=value,
        upper=upper,
    )
    if not report.lower_ok:
        log.warning("lower_bound_violated", lower=lower, value=value)
    if not report.upper_ok:
        log.warning("upper_bound_violated", upper=upper, value=value)
    return report