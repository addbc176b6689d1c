"""Tests for boundary corrections, measures, fits and the ε-convergence study."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np
import pytest

from emt_lab import asymptotics
from emt_lab.asymptotics import (
    CSV_COLUMNS,
    CaseResult,
    MeasurePoints,
    StudyRow,
    build_traction,
    cell_average_moment,
    check_geometry,
    convergence_study,
    first_order_correction,
    first_order_correction_checked,
    fit_slope,
    general_correction,
    phase_moment_field,
    raw_cell_average,
    run_case,
    study_mesh,
    study_tube,
    summarize,
    write_rows_csv,
)
from emt_lab.config.study import load_study_config
from emt_lab.emt import Convention, MomentTensor, moment_tensor
from emt_lab.errors import GeometryViolationError, MeshError, NormalizationError
from emt_lab.fem.assembly import ConstantStrainTraction, PolynomialTraction
from emt_lab.fem.elements import Space, build_space
from emt_lab.geometry import (
    Arc,
    Curve,
    CurveQuadrature,
    Segment,
    TubeRegion,
    quadrature_nodes,
)
from emt_lab.tensor_core import SymMat2, Tensor4, double_contract, mandel_vectors
from tests.conftest import (
    BASELINE_CONFIG,
    SEGMENT_P0,
    SEGMENT_P1,
    make_isotropic_pair,
    make_study_config,
)

STRAIN = np.array([[1.0, 0.2], [0.2, -0.5]])
NEUMANN_GRADS = np.array([[[0.3, -0.1], [-0.1, 0.7]], [[-0.4, 0.25], [0.25, 0.1]]])


def _segment() -> Segment:
    return Segment(SEGMENT_P0, SEGMENT_P1)


def _baseline_moment() -> MomentTensor:
    c0, c1 = make_isotropic_pair()
    return moment_tensor(c0, c1, (0.0, -1.0))


def _constant_u(pts: np.ndarray) -> np.ndarray:
    return np.broadcast_to(STRAIN, (pts.shape[0], 2, 2))


def _constant_n(pts: np.ndarray) -> np.ndarray:
    return np.broadcast_to(NEUMANN_GRADS[:, None], (2, pts.shape[0], 2, 2))


def _varying_u(pts: np.ndarray) -> np.ndarray:
    x, y = pts[:, 0], pts[:, 1]
    g = np.zeros((pts.shape[0], 2, 2))
    g[:, 0, 0] = x
    g[:, 0, 1] = g[:, 1, 0] = y
    g[:, 1, 1] = x * y
    return g


def _varying_n(pts: np.ndarray) -> np.ndarray:
    x, y = pts[:, 0], pts[:, 1]
    g = np.zeros((2, pts.shape[0], 2, 2))
    g[0, :, 0, 0] = 1.0
    g[0, :, 0, 1] = g[0, :, 1, 0] = x
    g[0, :, 1, 1] = y**2
    g[1, :, 0, 0] = y
    g[1, :, 1, 1] = 1.0
    return g


def _double(c: Tensor4, e: np.ndarray, g: np.ndarray) -> float:
    return float(mandel_vectors(g) @ c.mandel @ mandel_vectors(e))


def _closed_form(moment: MomentTensor, eps: float, length: float) -> np.ndarray:
    values = [_double(moment.tensor, STRAIN, g) for g in NEUMANN_GRADS]
    return 2.0 * eps * length * np.array(values)


# ---------------------------------------------------------------------------
# Curve corrections
# ---------------------------------------------------------------------------


class TestFirstOrderCorrection:
    def test_constant_integrand_is_exact(self) -> None:
        m = _baseline_moment()
        got = first_order_correction(_segment(), m, _constant_u, _constant_n, 0.03)
        np.testing.assert_allclose(got, _closed_form(m, 0.03, 0.6), rtol=1e-13)

    def test_matches_double_contraction(self) -> None:
        m = _baseline_moment()
        got = first_order_correction(_segment(), m, _constant_u, _constant_n, 0.03)
        e = SymMat2.from_matrix(STRAIN)
        expected = [
            2.0 * 0.03 * 0.6 * double_contract(m.tensor, e, SymMat2.from_matrix(g))
            for g in NEUMANN_GRADS
        ]
        np.testing.assert_allclose(got, expected, rtol=1e-13)

    def test_zero_contrast(self) -> None:
        c0, _ = make_isotropic_pair()
        zero = phase_moment_field(c0, c0)
        got = first_order_correction(_segment(), zero, _constant_u, _constant_n, 0.05)
        np.testing.assert_array_equal(got, np.zeros(2))

    def test_phase_field_equals_constant_tensor_on_segment(self) -> None:
        c0, c1 = make_isotropic_pair()
        field = first_order_correction(
            _segment(), phase_moment_field(c0, c1), _varying_u, _varying_n, 0.02
        )
        const = first_order_correction(
            _segment(), _baseline_moment(), _varying_u, _varying_n, 0.02
        )
        np.testing.assert_allclose(field, const, rtol=1e-13)

    def test_trim_shortens_the_integral(self) -> None:
        m = _baseline_moment()
        got = first_order_correction(_segment(), m, _constant_u, _constant_n, 0.03, trim=0.1)
        np.testing.assert_allclose(got, _closed_form(m, 0.03, 0.4), rtol=1e-13)

    def test_dense_trapezoid_oracle_on_arc(self) -> None:
        arc = Arc((0.0, 0.0), 0.5, 0.0, 0.5 * math.pi)
        m = _baseline_moment()
        got = first_order_correction(arc, m, _varying_u, _varying_n, 0.01)

        theta = np.linspace(0.0, 0.5 * math.pi, 200_001)
        pts = 0.5 * np.column_stack([np.cos(theta), np.sin(theta)])
        gu = mandel_vectors(_varying_u(pts))
        gn = mandel_vectors(_varying_n(pts))
        integrand = np.einsum("ij,mj,kmi->km", m.tensor.mandel, gu, gn)
        expected = 2.0 * 0.01 * np.trapezoid(integrand, 0.5 * theta, axis=-1)
        np.testing.assert_allclose(got, expected, rtol=1e-8)

    def test_linear_in_moment_and_gradient(self, rng: np.random.Generator) -> None:
        m = _baseline_moment()
        base = first_order_correction(_segment(), m, _varying_u, _varying_n, 0.02)
        for alpha, beta in rng.uniform(-3.0, 3.0, (4, 2)):
            scaled = MomentTensor(m.tensor * float(alpha))
            got = first_order_correction(
                _segment(), scaled, lambda p, b=beta: b * _varying_u(p), _varying_n, 0.02
            )
            np.testing.assert_allclose(got, alpha * beta * base, rtol=1e-12, atol=1e-15)

    def test_convention_flips_sign(self) -> None:
        c0, c1 = make_isotropic_pair()
        exp = first_order_correction(
            _segment(), phase_moment_field(c0, c1), _varying_u, _varying_n, 0.02
        )
        con = first_order_correction(
            _segment(),
            phase_moment_field(c0, c1, Convention.CONSTRUCTIVE),
            _varying_u,
            _varying_n,
            0.02,
        )
        np.testing.assert_allclose(con, -exp, rtol=1e-13)


class TestCheckedCorrection:
    def test_smooth_integrand_converges(self) -> None:
        checked = first_order_correction_checked(
            _segment(), _baseline_moment(), _varying_u, _varying_n, 0.02
        )
        assert checked.converged
        assert checked.change < 1e-10
        np.testing.assert_allclose(checked.value, checked.coarse, rtol=1e-10)

    def test_oscillatory_integrand_is_flagged(self) -> None:
        def wiggle(pts: np.ndarray) -> np.ndarray:
            return np.cos(40.0 * pts[:, 0])[:, None, None] * _constant_u(pts)

        checked = first_order_correction_checked(
            _segment(), _baseline_moment(), wiggle, _constant_n, 0.02, order=1, panels=1
        )
        assert not checked.converged
        assert checked.change > 1e-3

    def test_zero_correction_counts_as_converged(self) -> None:
        c0, _ = make_isotropic_pair()
        checked = first_order_correction_checked(
            _segment(), phase_moment_field(c0, c0), _constant_u, _constant_n, 0.02
        )
        assert checked.converged
        assert checked.change == 0.0


# ---------------------------------------------------------------------------
# Measures
# ---------------------------------------------------------------------------


class TestMeasurePoints:
    def test_from_tube_is_arclength(self) -> None:
        tube = TubeRegion(_segment(), 0.05)
        measure = MeasurePoints.from_tube(tube, _baseline_moment())
        assert measure.normalization == "arclength"
        assert measure.total_weight == pytest.approx(0.6 - 2.0 * 0.05**0.45, rel=1e-13)
        assert measure.normalized().total_weight == pytest.approx(1.0, abs=1e-14)

    def test_from_tube_keeps_closed_spine_whole(self) -> None:
        circle = Arc((0.0, 0.0), 0.4, 0.0, 2.0 * math.pi)
        assert circle.closed
        measure = MeasurePoints.from_tube(TubeRegion(circle, 0.05), _baseline_moment())
        assert measure.total_weight == pytest.approx(circle.length, rel=1e-13)

    def test_atoms_are_equally_weighted(self) -> None:
        m = _baseline_moment()
        measure = MeasurePoints.atoms([(0.0, 0.0), (0.1, 0.0), (0.2, 0.0), (0.3, 0.0)], [m] * 4)
        np.testing.assert_allclose(measure.weights, 0.25)
        assert measure.normalization == "probability"

    def test_mismatched_atoms(self) -> None:
        m = _baseline_moment()
        with pytest.raises(NormalizationError, match="same number of atoms"):
            MeasurePoints.atoms([(0.0, 0.0), (0.1, 0.0)], [m])

    def test_non_positive_weights(self) -> None:
        m = _baseline_moment()
        with pytest.raises(NormalizationError, match="positive"):
            MeasurePoints.atoms([(0.0, 0.0), (0.1, 0.0)], [m, m], weights=[1.5, -0.5])


class TestGeneralCorrection:
    def test_tube_measure_reproduces_curve_correction(self) -> None:
        arc = Arc((0.0, 0.0), 0.5, 0.0, 0.5 * math.pi)
        m = _baseline_moment()
        eps = 0.01
        tube = TubeRegion(arc, eps)
        curve_value = first_order_correction(arc, m, _varying_u, _varying_n, eps, trim=tube.trim)
        measure = MeasurePoints.from_tube(tube, m)
        mass = 2.0 * eps * measure.total_weight
        got = general_correction(measure.normalized(), mass, _varying_u, _varying_n)
        np.testing.assert_allclose(got, curve_value, rtol=1e-12)

    def test_single_point_mass(self) -> None:
        m = _baseline_moment()
        measure = MeasurePoints.atoms([(0.1, 0.2)], [m])
        got = general_correction(measure, 0.3, _constant_u, _constant_n)
        expected = 0.3 * np.array([_double(m.tensor, STRAIN, g) for g in NEUMANN_GRADS])
        np.testing.assert_allclose(got, expected, rtol=1e-13)

    def test_two_half_masses_average(self) -> None:
        m = _baseline_moment()
        p, q = (0.1, 0.2), (-0.3, 0.05)
        both = general_correction(MeasurePoints.atoms([p, q], [m, m]), 0.2, _varying_u, _varying_n)
        single = [
            general_correction(MeasurePoints.atoms([x], [m]), 0.2, _varying_u, _varying_n)
            for x in (p, q)
        ]
        np.testing.assert_allclose(both, 0.5 * (single[0] + single[1]), rtol=1e-13)

    def test_arclength_measure_rejected(self) -> None:
        measure = MeasurePoints.from_tube(TubeRegion(_segment(), 0.05), _baseline_moment())
        with pytest.raises(NormalizationError, match="expected a probability measure"):
            general_correction(measure, 0.1, _constant_u, _constant_n)

    def test_unnormalized_weights_rejected(self) -> None:
        m = _baseline_moment()
        measure = MeasurePoints.atoms([(0.0, 0.0), (0.1, 0.0)], [m, m], weights=[0.5, 0.6])
        with pytest.raises(NormalizationError, match="total weight"):
            general_correction(measure, 0.1, _constant_u, _constant_n)


# ---------------------------------------------------------------------------
# Fits
# ---------------------------------------------------------------------------


class TestFitSlope:
    def test_exact_power_law(self) -> None:
        x = [0.1, 0.05, 0.025, 0.0125]
        fit = fit_slope(x, [3.0 * v**1.5 for v in x])
        assert fit is not None
        assert fit.slope == pytest.approx(1.5, abs=1e-12)
        assert fit.intercept == pytest.approx(math.log(3.0), abs=1e-12)
        assert fit.fit_residual == pytest.approx(0.0, abs=1e-12)
        assert fit.points == 4

    def test_noisy_samples_report_error(self) -> None:
        fit = fit_slope([0.1, 0.05, 0.025], [0.1, 0.06, 0.02])
        assert fit is not None
        assert fit.stderr > 0.0
        assert fit.fit_residual > 0.0

    @pytest.mark.parametrize(
        ("x", "y"), [([0.1], [1.0]), ([0.1, 0.05], [1.0, 0.0]), ([0.0, 0.05], [1.0, 2.0])]
    )
    def test_undefined(self, x: list[float], y: list[float]) -> None:
        assert fit_slope(x, y) is None


# ---------------------------------------------------------------------------
# Study summaries on synthetic rows
# ---------------------------------------------------------------------------


def _synthetic_case(eps: float, *, points: int = 2, scale: float = 1.0) -> CaseResult:
    lhs = np.array([scale * eps, -0.5 * scale * eps])
    quad = np.array([0.4 * scale * eps**2, 0.0])
    rows = [
        StudyRow(
            eps=eps,
            point=p,
            area=1.2 * eps,
            lhs=lhs,
            rhs_exp=lhs + quad,
            rhs_neg=-(lhs + quad),
            l2_diff=scale * eps,
            h1_diff=scale * math.sqrt(eps),
            quadrature_change=1e-8,
            quadrature_converged=True,
            representation=lhs * (1.0 + 1e-3) if eps == 0.08 else None,
        )
        for p in range(points)
    ]
    return CaseResult(eps, rows)


SYNTHETIC_EPS = [0.08, 0.04, 0.02]


class TestSummarize:
    def test_expansion_wins_synthetic_sweep(self) -> None:
        config = make_study_config(eps=SYNTHETIC_EPS, acceptance={"fit_points": 3})
        summary = summarize(config, [_synthetic_case(e) for e in SYNTHETIC_EPS])
        assert summary.winner == "expansion"
        assert not summary.degenerate
        assert summary.passed
        exp_slopes = summary.residual_slopes["expansion"]
        assert all(f is not None and f.slope == pytest.approx(2.0) for f in exp_slopes)
        neg = summary.residual_slopes["constructive"][0]
        assert neg is not None
        assert neg.slope == pytest.approx(1.0, abs=0.05)
        assert summary.h1_slope is not None
        assert summary.h1_slope.slope == pytest.approx(0.5)
        assert summary.l2_slope is not None
        assert summary.l2_slope.slope == pytest.approx(1.0)
        assert summary.criteria["representation"].passed
        assert summary.criteria["sign_discrimination"].passed
        assert summary.notes == []

    def test_expected_convention_mismatch_fails(self) -> None:
        config = make_study_config(
            eps=SYNTHETIC_EPS, acceptance={"fit_points": 3}, expected_convention="constructive"
        )
        summary = summarize(config, [_synthetic_case(e) for e in SYNTHETIC_EPS])
        assert summary.criteria["expected_convention"].passed is False
        assert not summary.passed

    def test_slope_threshold_enforced(self) -> None:
        config = make_study_config(
            eps=SYNTHETIC_EPS, acceptance={"fit_points": 3, "residual_slope_min": 2.5}
        )
        summary = summarize(config, [_synthetic_case(e) for e in SYNTHETIC_EPS])
        assert summary.criteria["residual_slope"].passed is False
        assert not summary.passed

    def test_degenerate_sweep(self) -> None:
        config = make_study_config(eps=SYNTHETIC_EPS, acceptance={"fit_points": 3})
        summary = summarize(config, [_synthetic_case(e, scale=0.0) for e in SYNTHETIC_EPS])
        assert summary.degenerate
        assert summary.winner is None
        assert "degenerate: all residuals zero" in summary.notes
        assert summary.criteria["residual_slope"].passed is None
        assert "sign_discrimination" not in summary.criteria
        assert summary.criteria["h1_slope"].passed is None
        assert summary.passed

    def test_short_sweep_is_noted(self) -> None:
        config = make_study_config(eps=SYNTHETIC_EPS, acceptance={})
        summary = summarize(config, [_synthetic_case(e) for e in SYNTHETIC_EPS])
        assert "only 3 ε values available for fits" in summary.notes

    def test_disabled_criteria_are_absent(self) -> None:
        config = make_study_config(
            eps=SYNTHETIC_EPS,
            acceptance={
                "fit_points": 3,
                "residual_slope_min": None,
                "h1_slope_min": None,
                "h1_slope_max": None,
                "l2_slope_min": None,
                "representation_rel_tol": None,
            },
        )
        summary = summarize(config, [_synthetic_case(e) for e in SYNTHETIC_EPS])
        assert set(summary.criteria) == {"sign_discrimination", "quadrature"}


def test_write_rows_csv(tmp_path: Path) -> None:
    rows = [r for e in SYNTHETIC_EPS for r in _synthetic_case(e).rows]
    path = tmp_path / "rows.csv"
    write_rows_csv(rows, path)
    with path.open() as fh:
        lines = list(csv.reader(fh))
    assert tuple(lines[0]) == CSV_COLUMNS
    assert len(lines) == len(rows) + 1
    first = dict(zip(CSV_COLUMNS, lines[1], strict=True))
    assert float(first["eps"]) == 0.08
    assert first["point"] == "0"
    assert float(first["resid_exp"]) == rows[0].resid_exp


# ---------------------------------------------------------------------------
# Geometry checks and tractions
# ---------------------------------------------------------------------------


class TestCheckGeometry:
    def test_baseline_passes(self) -> None:
        check_geometry(make_study_config())

    def test_eps_beyond_arc_reach(self) -> None:
        config = make_study_config(
            curve={
                "kind": "arc",
                "center": [0.0, -0.4],
                "radius": 0.2,
                "angle0": 0.0,
                "angle1": math.pi,
            },
            eps=[0.25, 0.1],
        )
        with pytest.raises(GeometryViolationError, match="not below the spine reach"):
            check_geometry(config)
        check_geometry(config, eps=0.1)

    def test_end_trim_longer_than_spine(self) -> None:
        config = make_study_config(beta=0.3)
        with pytest.raises(GeometryViolationError, match="end trim"):
            check_geometry(config)
        check_geometry(config, eps=0.01)

    def test_spine_touching_boundary(self) -> None:
        config = make_study_config(curve={"kind": "segment", "p0": [0.5, 0.0], "p1": [1.0, 0.0]})
        with pytest.raises(GeometryViolationError) as exc_info:
            check_geometry(config)
        assert exc_info.value.violations


def test_build_traction_kinds() -> None:
    c0, _ = make_isotropic_pair()
    config = make_study_config()
    assert isinstance(build_traction(config.traction, c0), ConstantStrainTraction)
    poly = make_study_config(traction={"kind": "polynomial", "x": [[0.0, 1.0]], "y": [[0.0]]})
    assert isinstance(build_traction(poly.traction, c0), PolynomialTraction)


def test_study_tube_and_mesh() -> None:
    config = make_study_config()
    tube = study_tube(config, 0.05)
    assert tube.half_width == 0.05
    assert tube.trim_exponent == config.beta
    mesh = study_mesh(config, tube)
    assert mesh.inclusion_area == pytest.approx(tube.nominal_area(), rel=0.05)
    for y in config.measure_points:
        mesh.find_boundary_node(y)


# ---------------------------------------------------------------------------
# One case on a coarse mesh
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def coarse_case() -> CaseResult:
    return run_case(make_study_config(), 0.08, keep_fields=True)


class TestRunCase:
    def test_rows_per_point(self, coarse_case: CaseResult) -> None:
        assert [r.point for r in coarse_case.rows] == [0, 1]
        assert all(r.eps == 0.08 for r in coarse_case.rows)
        assert coarse_case.mesh["inclusion_area"] == coarse_case.rows[0].area

    def test_fields_kept(self, coarse_case: CaseResult) -> None:
        assert set(coarse_case.fields) == {"background", "perturbed"}

    def test_norms_ordered(self, coarse_case: CaseResult) -> None:
        row = coarse_case.rows[0]
        assert 0.0 < row.l2_diff <= row.h1_diff

    def test_quadrature_converged(self, coarse_case: CaseResult) -> None:
        assert all(r.quadrature_converged for r in coarse_case.rows)

    def test_representation_identity_is_discrete_exact(self, coarse_case: CaseResult) -> None:
        for row in coarse_case.rows:
            assert row.representation is not None
            gap = np.linalg.norm(row.lhs - row.representation)
            assert gap <= 1e-6 * np.linalg.norm(row.lhs)

    def test_both_conventions_compared(self, coarse_case: CaseResult) -> None:
        for row in coarse_case.rows:
            np.testing.assert_allclose(row.rhs_neg, -row.rhs_exp)
            assert np.linalg.norm(row.lhs) > 0.0


def test_case_corrections_use_trimmed_spine(monkeypatch: pytest.MonkeyPatch) -> None:
    trims: list[float] = []

    def recording_nodes(
        curve: Curve, order: int, trim: float = 0.0, panels: int | None = None
    ) -> CurveQuadrature:
        trims.append(trim)
        return quadrature_nodes(curve, order, trim, panels)

    monkeypatch.setattr(asymptotics, "quadrature_nodes", recording_nodes)
    config = make_study_config(measure_points=[[1.0, 0.0]])
    run_case(config, 0.08)
    assert trims
    assert trims == pytest.approx([0.08**config.beta] * len(trims))


class TestTorqueCorrection:
    @pytest.fixture(scope="class")
    def body_couple_case(self) -> CaseResult:
        return run_case(make_study_config(torque_correction="body_couple"), 0.08)

    def test_projected_is_the_default(self) -> None:
        assert make_study_config().torque_correction == "projected"

    def test_displacement_gap_does_not_depend_on_load(
        self, coarse_case: CaseResult, body_couple_case: CaseResult
    ) -> None:
        for proj, couple in zip(coarse_case.rows, body_couple_case.rows, strict=True):
            np.testing.assert_array_equal(proj.lhs, couple.lhs)
            assert not np.allclose(proj.rhs_exp, couple.rhs_exp, rtol=1e-12, atol=0.0)

    def test_projected_case_discriminates_conventions(self, coarse_case: CaseResult) -> None:
        for row in coarse_case.rows:
            assert np.linalg.norm(row.rhs_exp) > 0.0
            assert row.resid_exp != row.resid_neg


def test_representation_only_at_check_eps() -> None:
    case = run_case(make_study_config(), 0.05)
    assert all(r.representation is None for r in case.rows)


def test_cell_average_needs_inclusion_elements(square_space: Space) -> None:
    c0, c1 = make_isotropic_pair()
    tube = TubeRegion(_segment(), 0.05)
    with pytest.raises(MeshError, match="no inclusion elements"):
        raw_cell_average(square_space, c0, c1, tube)


def test_cell_average_zero_contrast(disk_tube: tuple[Space, TubeRegion]) -> None:
    space, tube = disk_tube
    c0, _ = make_isotropic_pair()
    np.testing.assert_array_equal(raw_cell_average(space, c0, c0, tube), np.zeros((3, 3)))


def test_repeated_study_is_bit_identical(tmp_path: Path) -> None:
    config = make_study_config()
    paths = []
    for run in range(2):
        path = tmp_path / f"run{run}.csv"
        convergence_study(config).write_csv(path)
        paths.append(path)
    assert paths[0].read_bytes() == paths[1].read_bytes()


# ---------------------------------------------------------------------------
# Desk-scale acceptance runs
# ---------------------------------------------------------------------------


@pytest.mark.slow
def test_cell_average_matches_closed_form() -> None:
    config = make_study_config(eps=[0.01], mesh={"h": 0.1, "tube_resolution": 2, "order": 2})
    tube = study_tube(config, 0.01)
    space = build_space(study_mesh(config, tube), 2)
    c0, c1 = make_isotropic_pair()
    got = cell_average_moment(space, c0, c1, tube)
    expected = moment_tensor(c0, c1, (0.0, -1.0)).tensor
    assert (got - expected).norm() <= 0.05 * expected.norm()


@pytest.mark.slow
def test_baseline_study_meets_acceptance(tmp_path: Path) -> None:
    config = load_study_config(BASELINE_CONFIG)
    report = convergence_study(config)
    summary = report.summary
    assert summary.winner is not None
    assert summary.criteria["residual_slope"].passed
    assert summary.criteria["sign_discrimination"].passed
    assert summary.criteria["h1_slope"].passed
    assert summary.criteria["l2_slope"].passed
    assert summary.criteria["representation"].passed
    report.write_csv(tmp_path / "a.csv")
    again = convergence_study(config)
    again.write_csv(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

