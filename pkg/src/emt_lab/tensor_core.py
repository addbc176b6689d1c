"""Value types and exact algebra for 2D strains and elasticity tensors.

Symmetric 2×2 matrices are stored in the orthonormal Mandel basis
``{e1⊗e1, e2⊗e2, √2·sym(e1⊗e2)}``, so a fully symmetric fourth-order tensor
is a symmetric 3×3 matrix whose eigenvalues are the extremes of ``C A : A``
over unit symmetric ``A``. Inversion and composition are plain 3×3 algebra.
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Any, Self

import numpy as np
from numpy.typing import ArrayLike, NDArray

from emt_lab.errors import AsymmetricTensorError, InvalidInputError, SingularTensorError

FloatArray = NDArray[np.float64]

SQRT2 = math.sqrt(2.0)
SYMMETRY_TOL = 1e-12
SINGULAR_TOL = 1e-12
ISOTROPY_TOL = 1e-12

# Mandel slot -> (row, column) of the 2×2 matrix, and the slot weight.
_PAIRS = ((0, 0), (1, 1), (0, 1))
_WEIGHTS = np.array([1.0, 1.0, SQRT2])


def mandel_vectors(a: ArrayLike) -> FloatArray:
    """Map a stack of 2×2 matrices ``(..., 2, 2)`` to Mandel vectors ``(..., 3)``.

    Only the symmetric part contributes.
    """
    m = np.asarray(a, dtype=np.float64)
    off = 0.5 * (m[..., 0, 1] + m[..., 1, 0])
    return np.stack([m[..., 0, 0], m[..., 1, 1], SQRT2 * off], axis=-1)


def matrices_from_mandel(v: ArrayLike) -> FloatArray:
    """Inverse of :func:`mandel_vectors`: ``(..., 3)`` to symmetric ``(..., 2, 2)``."""
    vec = np.asarray(v, dtype=np.float64)
    out = np.empty((*vec.shape[:-1], 2, 2))
    out[..., 0, 0] = vec[..., 0]
    out[..., 1, 1] = vec[..., 1]
    out[..., 0, 1] = out[..., 1, 0] = vec[..., 2] / SQRT2
    return out


@dataclass(frozen=True)
class SymMat2:
    """Symmetric 2×2 matrix: a strain, a stress or a constant matrix ``E``."""

    a11: float
    a12: float
    a22: float

    @classmethod
    def from_matrix(cls, a: ArrayLike) -> Self:
        """Build from any 2×2 array, keeping only its symmetric part."""
        m = np.asarray(a, dtype=np.float64)
        if m.shape != (2, 2):
            msg = f"expected a 2×2 matrix, got shape {m.shape}"
            raise InvalidInputError(msg)
        return cls(float(m[0, 0]), float(0.5 * (m[0, 1] + m[1, 0])), float(m[1, 1]))

    @classmethod
    def from_mandel(cls, v: ArrayLike) -> Self:
        """Build from a Mandel 3-vector."""
        vec = np.asarray(v, dtype=np.float64)
        return cls(float(vec[0]), float(vec[2] / SQRT2), float(vec[1]))

    @classmethod
    def identity(cls) -> Self:
        """The 2×2 identity ``I_2``."""
        return cls(1.0, 0.0, 1.0)

    @classmethod
    def zero(cls) -> Self:
        """The zero matrix."""
        return cls(0.0, 0.0, 0.0)

    @classmethod
    def outer_sym(cls, a: ArrayLike, b: ArrayLike) -> Self:
        """``sym(a ⊗ b)`` for two 2-vectors."""
        return cls.from_matrix(np.outer(np.asarray(a, float), np.asarray(b, float)))

    def to_matrix(self) -> FloatArray:
        """Dense 2×2 array."""
        return np.array([[self.a11, self.a12], [self.a12, self.a22]])

    def to_mandel(self) -> FloatArray:
        """Mandel 3-vector."""
        return np.array([self.a11, self.a22, SQRT2 * self.a12])

    def trace(self) -> float:
        """Matrix trace."""
        return self.a11 + self.a22

    def norm(self) -> float:
        """Frobenius norm ``(Σ A_ij²)^½``."""
        return float(np.linalg.norm(self.to_mandel()))

    def frobenius(self, other: SymMat2) -> float:
        """``A : B``."""
        return float(self.to_mandel() @ other.to_mandel())

    def apply(self, v: ArrayLike) -> FloatArray:
        """Matrix–vector product ``A v``."""
        return self.to_matrix() @ np.asarray(v, dtype=np.float64)

    def __add__(self, other: SymMat2) -> SymMat2:
        return SymMat2(self.a11 + other.a11, self.a12 + other.a12, self.a22 + other.a22)

    def __sub__(self, other: SymMat2) -> SymMat2:
        return SymMat2(self.a11 - other.a11, self.a12 - other.a12, self.a22 - other.a22)

    def __neg__(self) -> SymMat2:
        return SymMat2(-self.a11, -self.a12, -self.a22)

    def __mul__(self, scalar: float) -> SymMat2:
        return SymMat2(scalar * self.a11, scalar * self.a12, scalar * self.a22)

    __rmul__ = __mul__


def symmetrize(a: ArrayLike | SymMat2) -> SymMat2:
    """Symmetric part of a 2×2 matrix; idempotent on :class:`SymMat2`."""
    if isinstance(a, SymMat2):
        return a
    return SymMat2.from_matrix(a)


@dataclass(frozen=True, eq=False)
class Tensor4:
    """Fully symmetric 2D elasticity tensor in Mandel form.

    Major symmetry ``C_ijkl = C_klij`` is the symmetry of the 3×3 matrix;
    minor symmetries hold because the tensor only acts on symmetric matrices.
    Construction rejects matrices whose asymmetry exceeds ``SYMMETRY_TOL``
    relative to their scale and stores the exactly symmetrized matrix.
    """

    mandel: FloatArray = field(repr=False)

    def __post_init__(self) -> None:
        m = np.array(self.mandel, dtype=np.float64)
        if m.shape != (3, 3):
            msg = f"Mandel matrix must be 3×3, got shape {m.shape}"
            raise InvalidInputError(msg)
        if not np.all(np.isfinite(m)):
            msg = "Mandel matrix has non-finite entries"
            raise InvalidInputError(msg)
        residual = symmetry_residual(m)
        if residual > SYMMETRY_TOL * max(1.0, float(np.abs(m).max())):
            msg = f"Mandel matrix is not symmetric (residual {residual:.3e})"
            raise AsymmetricTensorError(msg, residual)
        m = 0.5 * (m + m.T)
        m.flags.writeable = False
        object.__setattr__(self, "mandel", m)

    @classmethod
    def from_matrix(cls, m: ArrayLike, *, symmetrize: bool = False) -> Self:
        """Build from a 3×3 array, optionally forcing symmetry first."""
        arr = np.asarray(m, dtype=np.float64)
        if symmetrize:
            arr = 0.5 * (arr + arr.T)
        return cls(arr)

    @classmethod
    def identity(cls) -> Self:
        """``I_4``, the identity on symmetric matrices."""
        return cls(np.eye(3))

    @classmethod
    def zero(cls) -> Self:
        """The zero tensor."""
        return cls(np.zeros((3, 3)))

    @classmethod
    def from_components(cls, c: ArrayLike) -> Self:
        """Build from a ``(2, 2, 2, 2)`` component array ``C_ijkl``.

        The array must carry the minor symmetries; only the listed Mandel
        slots are read.
        """
        comp = np.asarray(c, dtype=np.float64)
        if comp.shape != (2, 2, 2, 2):
            msg = f"component array must be 2×2×2×2, got shape {comp.shape}"
            raise InvalidInputError(msg)
        m = np.empty((3, 3))
        for a, (i, j) in enumerate(_PAIRS):
            for b, (k, l) in enumerate(_PAIRS):
                m[a, b] = _WEIGHTS[a] * _WEIGHTS[b] * comp[i, j, k, l]
        return cls(m)

    def to_components(self) -> FloatArray:
        """Component array ``C_ijkl`` with all minor and major symmetries."""
        comp = np.empty((2, 2, 2, 2))
        index = {(0, 0): 0, (1, 1): 1, (0, 1): 2, (1, 0): 2}
        for (i, j), a in index.items():
            for (k, l), b in index.items():
                comp[i, j, k, l] = self.mandel[a, b] / (_WEIGHTS[a] * _WEIGHTS[b])
        return comp

    def norm(self) -> float:
        """Frobenius norm, equal to ``(Σ C_ijkl²)^½``."""
        return float(np.linalg.norm(self.mandel))

    def __add__(self, other: Tensor4) -> Tensor4:
        return Tensor4(self.mandel + other.mandel)

    def __sub__(self, other: Tensor4) -> Tensor4:
        return Tensor4(self.mandel - other.mandel)

    def __neg__(self) -> Tensor4:
        return Tensor4(-self.mandel)

    def __mul__(self, scalar: float) -> Tensor4:
        return Tensor4(scalar * self.mandel)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        rows = ", ".join("[" + ", ".join(f"{x:.6g}" for x in row) + "]" for row in self.mandel)
        return f"Tensor4(mandel=[{rows}])"


@dataclass(frozen=True)
class RigidMotion:
    """Infinitesimal rigid motion ``R(x) = W x + c`` with ``W = [[0, -w], [w, 0]]``."""

    w: float
    c: tuple[float, float] = (0.0, 0.0)

    @property
    def skew(self) -> FloatArray:
        """The skew generator ``W``."""
        return np.array([[0.0, -self.w], [self.w, 0.0]])

    def __call__(self, x: ArrayLike) -> FloatArray:
        """Evaluate at points ``(..., 2)``."""
        pts = np.asarray(x, dtype=np.float64)
        return pts @ self.skew.T + np.asarray(self.c)

    def symmetric_gradient(self) -> SymMat2:
        """Always zero: rigid motions carry no strain."""
        return SymMat2.from_matrix(0.5 * (self.skew + self.skew.T))


def symmetry_residual(m: ArrayLike) -> float:
    """Largest entry of ``|m - mᵀ|`` for a square matrix."""
    arr = np.asarray(m, dtype=np.float64)
    return float(np.abs(arr - arr.T).max())


def make_isotropic(lam: float, mu: float) -> Tensor4:
    """``λ I_2⊗I_2 + 2μ I_4``, so that ``C A = λ tr(A) I + 2μ A``."""
    m = np.array(
        [
            [lam + 2.0 * mu, lam, 0.0],
            [lam, lam + 2.0 * mu, 0.0],
            [0.0, 0.0, 2.0 * mu],
        ]
    )
    return Tensor4(m)


def is_isotropic(c: Tensor4, tol: float = ISOTROPY_TOL) -> tuple[float, float] | None:
    """Return the Lamé pair ``(λ, μ)`` if *c* is isotropic, else ``None``."""
    lam = float(c.mandel[0, 1])
    mu = 0.5 * float(c.mandel[2, 2])
    residual = np.abs(make_isotropic(lam, mu).mandel - c.mandel).max()
    if residual <= tol * max(1.0, c.norm()):
        return lam, mu
    return None


def contract(c: Tensor4, a: SymMat2) -> SymMat2:
    """``C A``, i.e. ``Σ_kl C_ijkl A_kl``."""
    return SymMat2.from_mandel(c.mandel @ a.to_mandel())


def double_contract(c: Tensor4, a: SymMat2, b: SymMat2) -> float:
    """``C A : B``, i.e. ``Σ C_ijkl A_kl B_ij``."""
    return float(b.to_mandel() @ c.mandel @ a.to_mandel())


def convexity_margin(c: Tensor4) -> float:
    """Smallest eigenvalue of the Mandel matrix.

    Equals ``min C A : A`` over symmetric ``A`` with ``|A| = 1``.
    """
    return float(np.linalg.eigvalsh(c.mandel)[0])


def compose(a: Tensor4, b: Tensor4, *, symmetrize: bool = False) -> Tensor4:
    """Operator composition ``A ∘ B`` (apply ``B`` first).

    The product of two symmetric Mandel matrices is symmetric only when they
    commute; pass ``symmetrize=True`` to keep its symmetric part, which is all
    that quadratic forms ``(A∘B) E : E`` see.
    """
    return Tensor4.from_matrix(a.mandel @ b.mandel, symmetrize=symmetrize)


def compose_matrix(*tensors: Tensor4) -> FloatArray:
    """Mandel matrix of ``T1 ∘ T2 ∘ ...`` without a symmetry check."""
    out = np.eye(3)
    for t in tensors:
        out = out @ t.mandel
    return out


def invert(c: Tensor4) -> Tensor4:
    """Inverse of *c* on symmetric matrices.

    Raises:
        SingularTensorError: when the convexity margin is at or below
            ``SINGULAR_TOL``.
    """
    margin = convexity_margin(c)
    if margin <= SINGULAR_TOL:
        msg = f"tensor is not invertible on symmetric matrices (margin {margin:.3e})"
        raise SingularTensorError(msg)
    return Tensor4.from_matrix(np.linalg.inv(c.mandel), symmetrize=True)


def rotation_matrix(angle: float) -> FloatArray:
    """Planar rotation by *angle* radians."""
    cs, sn = math.cos(angle), math.sin(angle)
    return np.array([[cs, -sn], [sn, cs]])


def strain_rotation(angle: float) -> FloatArray:
    """Mandel matrix of ``A ↦ Q A Qᵀ``; orthogonal."""
    q = rotation_matrix(angle)
    basis = matrices_from_mandel(np.eye(3))
    return mandel_vectors(q @ basis @ q.T).T


def rotate(c: Tensor4, angle: float) -> Tensor4:
    """Tensor of the material rotated by *angle*: ``C'(QAQᵀ) = Q (C A) Qᵀ``."""
    r = strain_rotation(angle)
    return Tensor4.from_matrix(r @ c.mandel @ r.T, symmetrize=True)


def rotate_sym(a: SymMat2, angle: float) -> SymMat2:
    """``Q A Qᵀ``."""
    q = rotation_matrix(angle)
    return SymMat2.from_matrix(q @ a.to_matrix() @ q.T)


def mandel_from_json(obj: Mapping[str, Any]) -> FloatArray:
    """Raw Mandel matrix from ``{"mandel": ...}`` or ``{"lambda", "mu"}``.

    No symmetry check is applied, so diagnostics can report on malformed
    input before a :class:`Tensor4` is built.
    """
    if "mandel" in obj:
        try:
            m = np.asarray(obj["mandel"], dtype=np.float64)
        except (TypeError, ValueError) as exc:
            msg = f"mandel entries must be numbers: {exc}"
            raise InvalidInputError(msg) from exc
        if m.shape != (3, 3):
            msg = f"mandel must be a 3×3 array, got shape {m.shape}"
            raise InvalidInputError(msg)
        return m
    if "lambda" in obj and "mu" in obj:
        try:
            lam, mu = float(obj["lambda"]), float(obj["mu"])
        except (TypeError, ValueError) as exc:
            msg = f"lambda and mu must be numbers: {exc}"
            raise InvalidInputError(msg) from exc
        return make_isotropic(lam, mu).mandel.copy()
    msg = 'tensor JSON needs either "mandel" or both "lambda" and "mu"'
    raise InvalidInputError(msg)


def tensor_from_json(obj: Mapping[str, Any]) -> Tensor4:
    """Parse a tensor JSON object."""
    return Tensor4(mandel_from_json(obj))


def tensor_to_json(c: Tensor4) -> dict[str, Any]:
    """Serialize; isotropic tensors use the Lamé form."""
    lame = is_isotropic(c)
    if lame is not None:
        return {"lambda": lame[0], "mu": lame[1]}
    return {"mandel": c.mandel.tolist()}
