"""Tests for study files and runtime settings."""

import json
from pathlib import Path

import pytest
import yaml
from pydantic import ValidationError

from emt_lab.config import RuntimeSettings, StudyConfig, load_study_config
from emt_lab.config.study import MeshSpec, PhaseSpec
from emt_lab.config.validators import (
    check_strictly_decreasing,
    check_symmetric_2x2,
    parse_float_list,
)
from emt_lab.geometry import ArcSpec, RectangleSpec
from emt_lab.tensor_core import is_isotropic
from tests.conftest import BASELINE_CONFIG, ZERO_CONTRAST_CONFIG, make_study_config, study_dict

# -- Phases --


def test_phase_from_lame_pair() -> None:
    phase = PhaseSpec.model_validate({"lambda": 2.0, "mu": 3.0})
    assert is_isotropic(phase.to_tensor()) == pytest.approx((2.0, 3.0))


def test_phase_from_mandel() -> None:
    phase = PhaseSpec(mandel=[[3.0, 1.0, 0.0], [1.0, 3.0, 0.0], [0.0, 0.0, 2.0]])
    assert phase.to_tensor().mandel[0, 1] == 1.0


@pytest.mark.parametrize(
    "data",
    [
        {},
        {"lambda": 1.0},
        {"mu": 1.0, "mandel": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]},
        {"lambda": 1.0, "mu": 1.0, "mandel": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]},
    ],
)
def test_phase_needs_exactly_one_form(data: dict[str, object]) -> None:
    with pytest.raises(ValidationError, match="either"):
        PhaseSpec.model_validate(data)


def test_phase_must_be_strongly_convex() -> None:
    with pytest.raises(ValidationError, match="not strongly convex"):
        PhaseSpec.model_validate({"lambda": 1.0, "mu": -1.0})


def test_asymmetric_mandel_phase_rejected() -> None:
    with pytest.raises(ValidationError):
        PhaseSpec(mandel=[[3.0, 1.0, 0.0], [0.0, 3.0, 0.0], [0.0, 0.0, 2.0]])


# -- Study --


def test_study_defaults() -> None:
    data = study_dict()
    del data["beta"]
    config = StudyConfig.model_validate(data)
    assert config.conventions == ["expansion", "constructive"]
    assert config.torque_correction == "projected"
    assert config.quad_order == 4
    assert config.beta == 0.45
    assert config.K == 10.0
    assert config.domain.kind == "disk"
    assert config.check_eps == 0.08


def test_representation_eps_selects_check() -> None:
    config = make_study_config(representation_eps=0.05)
    assert config.check_eps == 0.05


def test_representation_eps_must_be_in_sweep() -> None:
    with pytest.raises(ValidationError, match="not in eps"):
        make_study_config(representation_eps=0.03)


@pytest.mark.parametrize("eps", [[0.05, 0.08], [0.05, 0.05], [0.05, -0.01], [0.0]])
def test_eps_must_decrease_and_stay_positive(eps: list[float]) -> None:
    with pytest.raises(ValidationError, match="eps must be"):
        make_study_config(eps=eps)


def test_measure_points_distinct() -> None:
    with pytest.raises(ValidationError, match="distinct"):
        make_study_config(measure_points=[[1.0, 0.0], [1.0, 0.0]])


def test_expected_convention_must_be_compared() -> None:
    with pytest.raises(ValidationError, match="is not compared"):
        make_study_config(conventions=["expansion"], expected_convention="constructive")


def test_duplicate_conventions_rejected() -> None:
    with pytest.raises(ValidationError, match="conventions must be distinct"):
        make_study_config(conventions=["expansion", "expansion"])


def test_asymmetric_strain_rejected() -> None:
    with pytest.raises(ValidationError, match="symmetric"):
        make_study_config(traction={"kind": "constant_strain", "strain": [[1.0, 0.5], [0.0, 0.0]]})


def test_unknown_keys_rejected() -> None:
    with pytest.raises(ValidationError):
        make_study_config(mesh_size=0.1)


def test_curve_and_domain_dispatch() -> None:
    config = make_study_config(
        domain={"kind": "rectangle", "lower": [-1.0, -1.0], "upper": [1.0, 1.0]},
        curve={"kind": "arc", "center": [0.0, 0.0], "radius": 0.4, "angle0": 0.0, "angle1": 1.0},
    )
    assert isinstance(config.domain, RectangleSpec)
    assert isinstance(config.curve, ArcSpec)


# -- Mesh and acceptance blocks --


def test_recovery_requires_p1() -> None:
    with pytest.raises(ValidationError, match="requires order 1"):
        MeshSpec(order=2, gradient_recovery=True)
    assert MeshSpec(order=1, gradient_recovery=True).gradient_recovery


def test_mesh_spec_is_strict() -> None:
    with pytest.raises(ValidationError):
        MeshSpec.model_validate({"h": "0.1"})
    with pytest.raises(ValidationError):
        MeshSpec(tube_resolution=1)


def test_acceptance_can_disable_criteria() -> None:
    config = make_study_config(acceptance={"residual_slope_min": None, "fit_points": 3})
    assert config.acceptance.residual_slope_min is None
    assert config.acceptance.fit_points == 3
    with pytest.raises(ValidationError):
        make_study_config(acceptance={"fit_points": 1})


# -- Loading --


def test_load_json(tmp_path: Path) -> None:
    path = tmp_path / "study.json"
    path.write_text(json.dumps(study_dict(name="from-json")))
    assert load_study_config(path).name == "from-json"


def test_load_yaml(tmp_path: Path) -> None:
    path = tmp_path / "study.yaml"
    path.write_text(yaml.safe_dump(study_dict(name="from-yaml")))
    config = load_study_config(path)
    assert config.name == "from-yaml"
    assert config == make_study_config(name="from-yaml")


def test_load_non_mapping(tmp_path: Path) -> None:
    path = tmp_path / "list.yaml"
    path.write_text("- 1\n- 2\n")
    with pytest.raises(ValueError, match="expected a mapping"):
        load_study_config(path)


def test_load_missing_file(tmp_path: Path) -> None:
    with pytest.raises(FileNotFoundError):
        load_study_config(tmp_path / "absent.json")


@pytest.mark.parametrize("path", [BASELINE_CONFIG, ZERO_CONTRAST_CONFIG])
def test_shipped_configs_validate(path: Path) -> None:
    config = load_study_config(path)
    assert isinstance(config, StudyConfig)


def test_baseline_config_values() -> None:
    config = load_study_config(BASELINE_CONFIG)
    assert config.eps == [0.04, 0.028, 0.02, 0.014, 0.01]
    assert len(config.measure_points) == 3
    assert config.acceptance.residual_slope_min == 1.2


def test_shipped_yaml_example_validates() -> None:
    config = load_study_config(BASELINE_CONFIG.parent / "arc_yaml_example.yaml")
    assert config.curve.kind == "arc"


# -- Validators --


def test_parse_float_list() -> None:
    assert parse_float_list("0, 1", 2, "n") == [0.0, 1.0]
    assert parse_float_list("0.5 -1e-3", 2, "n") == [0.5, -0.001]
    with pytest.raises(ValueError, match="needs 2 numbers"):
        parse_float_list("1", 2, "n")


def test_check_helpers() -> None:
    check_strictly_decreasing([0.3, 0.2, 0.1], "eps")
    check_symmetric_2x2([[1.0, 0.2], [0.2, 0.0]], "E")
    with pytest.raises(ValueError, match="2×2"):
        check_symmetric_2x2([[1.0, 0.0, 0.0]], "E")


# -- Runtime settings --


def test_runtime_settings_defaults(monkeypatch: pytest.MonkeyPatch) -> None:
    for var in ("LOG_LEVEL", "OTEL_EXPORTER_OTLP_ENDPOINT", "OTEL_EXPORTER_OTLP_PROTOCOL"):
        monkeypatch.delenv(var, raising=False)
    settings = RuntimeSettings()
    assert settings.log_level == "INFO"
    assert settings.otel_exporter_otlp_endpoint is None
    assert settings.otel_exporter_otlp_protocol == "grpc"
    assert settings.otel_service_name == "emt-lab"


def test_runtime_settings_from_env(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("LOG_LEVEL", "debug")
    monkeypatch.setenv("OTEL_EXPORTER_OTLP_ENDPOINT", "http://localhost:4318")
    monkeypatch.setenv("OTEL_EXPORTER_OTLP_PROTOCOL", "http/protobuf")
    settings = RuntimeSettings()
    assert settings.log_level == "debug"
    assert settings.otel_exporter_otlp_endpoint == "http://localhost:4318"
    assert settings.otel_exporter_otlp_protocol == "http/protobuf"


def test_runtime_settings_reject_unknown_protocol(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("OTEL_EXPORTER_OTLP_PROTOCOL", "carrier-pigeon")
    with pytest.raises(ValidationError):
        RuntimeSettings()
