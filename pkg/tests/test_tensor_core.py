"""Tests for symmetric 2×2 matrices and Mandel-form elasticity tensors."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from emt_lab.errors import AsymmetricTensorError, InvalidInputError, SingularTensorError
from emt_lab.tensor_core import (
    RigidMotion,
    SymMat2,
    Tensor4,
    compose,
    contract,
    convexity_margin,
    double_contract,
    invert,
    is_isotropic,
    make_isotropic,
    mandel_from_json,
    mandel_vectors,
    matrices_from_mandel,
    rotate,
    rotate_sym,
    symmetry_residual,
    tensor_from_json,
    tensor_to_json,
)
from tests.conftest import make_random_convex_tensor, make_random_strain

finite = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False, allow_infinity=False)
seeds = st.integers(min_value=0, max_value=2**32 - 1)


def _component_contract(c: Tensor4, a: np.ndarray) -> np.ndarray:
    comp = c.to_components()
    out = np.zeros((2, 2))
    for i in range(2):
        for j in range(2):
            for k in range(2):
                for l in range(2):  # noqa: E741
                    out[i, j] += comp[i, j, k, l] * a[k, l]
    return out


# ---------------------------------------------------------------------------
# SymMat2
# ---------------------------------------------------------------------------


class TestSymMat2:
    def test_from_matrix_keeps_symmetric_part(self) -> None:
        a = SymMat2.from_matrix([[1.0, 2.0], [4.0, 5.0]])
        assert (a.a11, a.a12, a.a22) == (1.0, 3.0, 5.0)

    def test_rejects_wrong_shape(self) -> None:
        with pytest.raises(InvalidInputError, match="2×2"):
            SymMat2.from_matrix(np.eye(3))

    def test_mandel_norm_is_frobenius(self) -> None:
        a = SymMat2(1.0, 2.0, 3.0)
        assert a.norm() == pytest.approx(np.linalg.norm(a.to_matrix()))
        assert a.frobenius(a) == pytest.approx(1.0 + 8.0 + 9.0)

    def test_outer_sym(self) -> None:
        a = SymMat2.outer_sym([1.0, 0.0], [0.0, 1.0])
        np.testing.assert_allclose(a.to_matrix(), [[0.0, 0.5], [0.5, 0.0]])

    def test_arithmetic(self) -> None:
        a, b = SymMat2(1.0, 2.0, 3.0), SymMat2.identity()
        assert (a + b - b) == a
        assert (2.0 * a).to_mandel() == pytest.approx(2.0 * a.to_mandel())
        assert (-a + a) == SymMat2.zero()

    def test_vectorized_mandel_helpers_agree(self, rng: np.random.Generator) -> None:
        stack = rng.standard_normal((5, 4, 2, 2))
        stack = 0.5 * (stack + np.swapaxes(stack, -1, -2))
        np.testing.assert_allclose(matrices_from_mandel(mandel_vectors(stack)), stack)
        np.testing.assert_allclose(
            mandel_vectors(stack[0, 0]), SymMat2.from_matrix(stack[0, 0]).to_mandel()
        )


# ---------------------------------------------------------------------------
# Construction and symmetry
# ---------------------------------------------------------------------------


class TestTensor4:
    def test_isotropic_action(self) -> None:
        c = make_isotropic(2.0, 3.0)
        a = SymMat2(1.0, 0.5, -2.0)
        expected = 2.0 * a.trace() * np.eye(2) + 6.0 * a.to_matrix()
        np.testing.assert_allclose(contract(c, a).to_matrix(), expected, atol=1e-14)

    def test_asymmetric_matrix_rejected(self) -> None:
        m = np.eye(3)
        m[0, 1] = 0.5
        with pytest.raises(AsymmetricTensorError) as exc_info:
            Tensor4(m)
        assert exc_info.value.residual == pytest.approx(0.5)

    def test_symmetrize_flag_accepts_asymmetric_input(self) -> None:
        m = np.eye(3)
        m[0, 1] = 0.5
        c = Tensor4.from_matrix(m, symmetrize=True)
        assert c.mandel[0, 1] == c.mandel[1, 0] == pytest.approx(0.25)

    def test_non_finite_rejected(self) -> None:
        with pytest.raises(InvalidInputError, match="non-finite"):
            Tensor4(np.full((3, 3), np.nan))

    def test_mandel_is_read_only(self) -> None:
        c = Tensor4.identity()
        with pytest.raises(ValueError, match="read-only"):
            c.mandel[0, 0] = 2.0

    def test_components_round_trip(self, rng: np.random.Generator) -> None:
        c = make_random_convex_tensor(rng)
        comp = c.to_components()
        assert np.allclose(comp, comp.transpose(1, 0, 2, 3))
        assert np.allclose(comp, comp.transpose(2, 3, 0, 1))
        np.testing.assert_allclose(Tensor4.from_components(comp).mandel, c.mandel, atol=1e-15)

    def test_symmetry_residual(self) -> None:
        assert symmetry_residual(np.eye(3)) == 0.0
        assert symmetry_residual([[1.0, 2.0], [3.0, 1.0]]) == 1.0


# ---------------------------------------------------------------------------
# Contractions
# ---------------------------------------------------------------------------


class TestContractions:
    @given(seed=seeds)
    def test_contract_matches_component_sum(self, seed: int) -> None:
        rng = np.random.default_rng(seed)
        c = make_random_convex_tensor(rng)
        a = make_random_strain(rng)
        got = contract(c, SymMat2.from_matrix(a)).to_matrix()
        np.testing.assert_allclose(got, _component_contract(c, a), atol=1e-14)

    @given(seed=seeds)
    def test_double_contract_matches_component_sum(self, seed: int) -> None:
        rng = np.random.default_rng(seed)
        c = make_random_convex_tensor(rng)
        a, b = make_random_strain(rng), make_random_strain(rng)
        expected = float(np.sum(_component_contract(c, a) * b))
        got = double_contract(c, SymMat2.from_matrix(a), SymMat2.from_matrix(b))
        assert got == pytest.approx(expected, abs=1e-14)

    def test_double_contract_is_symmetric_in_arguments(self, rng: np.random.Generator) -> None:
        c = make_random_convex_tensor(rng)
        a = SymMat2.from_matrix(make_random_strain(rng))
        b = SymMat2.from_matrix(make_random_strain(rng))
        assert double_contract(c, a, b) == pytest.approx(double_contract(c, b, a), abs=1e-14)


# ---------------------------------------------------------------------------
# Convexity and inversion
# ---------------------------------------------------------------------------


class TestConvexity:
    @pytest.mark.parametrize(
        ("lam", "mu", "margin"),
        [(1.0, 1.0, 2.0), (-0.4, 0.5, 0.2), (0.0, 0.5, 1.0)],
    )
    def test_isotropic_margin(self, lam: float, mu: float, margin: float) -> None:
        assert convexity_margin(make_isotropic(lam, mu)) == pytest.approx(margin)

    def test_identity_margin(self) -> None:
        assert convexity_margin(Tensor4.identity()) == pytest.approx(1.0)

    def test_non_convex_margin_is_negative(self) -> None:
        assert convexity_margin(make_isotropic(-2.0, 1.0)) < 0.0

    @given(seed=seeds)
    def test_margin_bounds_quadratic_form(self, seed: int) -> None:
        rng = np.random.default_rng(seed)
        c = make_random_convex_tensor(rng)
        a = SymMat2.from_matrix(make_random_strain(rng))
        assert double_contract(c, a, a) >= convexity_margin(c) * a.norm() ** 2 - 1e-12

    @given(seed=seeds)
    def test_compose_with_inverse_is_identity(self, seed: int) -> None:
        c = make_random_convex_tensor(np.random.default_rng(seed))
        product = compose(c, invert(c), symmetrize=True)
        np.testing.assert_allclose(product.mandel, np.eye(3), atol=1e-12)

    def test_invert_singular_raises(self) -> None:
        with pytest.raises(SingularTensorError):
            invert(Tensor4.zero())

    def test_is_isotropic_recovers_lame_pair(self, rng: np.random.Generator) -> None:
        assert is_isotropic(make_isotropic(2.0, 3.0)) == pytest.approx((2.0, 3.0))
        assert is_isotropic(make_random_convex_tensor(rng)) is None


# ---------------------------------------------------------------------------
# Rotations and rigid motions
# ---------------------------------------------------------------------------


class TestRotation:
    @given(angle=st.floats(min_value=-np.pi, max_value=np.pi))
    def test_isotropic_tensor_is_rotation_invariant(self, angle: float) -> None:
        c = make_isotropic(1.5, 0.7)
        np.testing.assert_allclose(rotate(c, angle).mandel, c.mandel, atol=1e-12)

    def test_rotation_commutes_with_contraction(self, rng: np.random.Generator) -> None:
        c = make_random_convex_tensor(rng)
        a = SymMat2.from_matrix(make_random_strain(rng))
        angle = 0.37
        lhs = contract(rotate(c, angle), rotate_sym(a, angle)).to_matrix()
        rhs = rotate_sym(contract(c, a), angle).to_matrix()
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_rigid_motion_has_no_strain() -> None:
    r = RigidMotion(0.3, (1.0, -2.0))
    assert r.symmetric_gradient() == SymMat2.zero()
    np.testing.assert_allclose(r(np.array([[1.0, 0.0]])), [[1.0, -1.7]])


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------


class TestJson:
    def test_lame_form(self) -> None:
        c = tensor_from_json({"lambda": 1.0, "mu": 1.0})
        np.testing.assert_allclose(c.mandel, make_isotropic(1.0, 1.0).mandel)

    def test_round_trip_keeps_form(self, rng: np.random.Generator) -> None:
        assert tensor_to_json(make_isotropic(2.0, 3.0)) == {"lambda": 2.0, "mu": 3.0}
        c = make_random_convex_tensor(rng)
        np.testing.assert_allclose(tensor_from_json(tensor_to_json(c)).mandel, c.mandel)

    @pytest.mark.parametrize(
        ("obj", "match"),
        [
            ({}, "either"),
            ({"mu": 1.0}, "either"),
            ({"mandel": [[1.0, 2.0]]}, "3×3"),
            ({"mandel": [["a", 0, 0], [0, 1, 0], [0, 0, 1]]}, "numbers"),
            ({"lambda": "x", "mu": 1.0}, "numbers"),
        ],
    )
    def test_malformed(self, obj: dict[str, object], match: str) -> None:
        with pytest.raises(InvalidInputError, match=match):
            mandel_from_json(obj)

    def test_raw_mandel_skips_symmetry_check(self) -> None:
        m = mandel_from_json({"mandel": [[1, 2, 0], [0, 1, 0], [0, 0, 1]]})
        assert m[0, 1] == 2.0
