"""Shared test constants, fixtures, and factory functions."""

from __future__ import annotations

from pathlib import Path
from typing import Any

import numpy as np
import pytest
from hypothesis import settings

from emt_lab.config.study import StudyConfig
from emt_lab.fem.elements import Space, build_space
from emt_lab.fem.mesh import Mesh, generate_mesh
from emt_lab.geometry import Disk, Rectangle, Segment, TubeRegion
from emt_lab.tensor_core import Tensor4, make_isotropic

settings.register_profile("repeatable", derandomize=True, deadline=None, max_examples=60)
settings.load_profile("repeatable")

# -- Constants --

REPO_ROOT = Path(__file__).resolve().parents[1]
BASELINE_CONFIG = REPO_ROOT / "configs" / "baseline.json"
ZERO_CONTRAST_CONFIG = REPO_ROOT / "configs" / "zero_contrast.json"

# Background (λ0, μ0) and inclusion (λ1, μ1) of the baseline scenario
LAME_BACKGROUND = (1.0, 1.0)
LAME_INCLUSION = (2.0, 3.0)

# Printed closed-form coefficients for the baseline pair with n = e2
BASELINE_COEFFS = (-3.0 / 8.0, -2.0 / 3.0, -23.0 / 12.0, -1.0 / 6.0)

ORACLE_TOL = 1e-10
SEED = 20240601

SEGMENT_P0 = (-0.3, 0.0)
SEGMENT_P1 = (0.3, 0.0)

# Boundary points of the unit disk
DISK_POINTS = [(1.0, 0.0), (0.0, 1.0), (-0.7071067811865476, 0.7071067811865476)]


def _study_dict() -> dict[str, Any]:
    return {
        "name": "test-study",
        "domain": {"kind": "disk", "center": [0.0, 0.0], "radius": 1.0},
        "curve": {"kind": "segment", "p0": list(SEGMENT_P0), "p1": list(SEGMENT_P1)},
        "phases": {
            "background": {"lambda": LAME_BACKGROUND[0], "mu": LAME_BACKGROUND[1]},
            "inclusion": {"lambda": LAME_INCLUSION[0], "mu": LAME_INCLUSION[1]},
        },
        "traction": {"kind": "constant_strain", "strain": [[1.0, 0.0], [0.0, 0.0]]},
        "measure_points": [list(p) for p in DISK_POINTS[:2]],
        "eps": [0.08, 0.05],
        "mesh": {"h": 0.15, "tube_resolution": 2, "order": 2},
        "beta": 0.7,
        "acceptance": {"fit_points": 2},
    }


# -- Factories --


def make_isotropic_pair() -> tuple[Tensor4, Tensor4]:
    """Baseline background and inclusion tensors."""
    return make_isotropic(*LAME_BACKGROUND), make_isotropic(*LAME_INCLUSION)


def make_random_convex_tensor(rng: np.random.Generator, margin: float = 0.1) -> Tensor4:
    """Unit-normalized random SPD Mandel matrix shifted to have at least *margin*."""
    a = rng.standard_normal((3, 3))
    m = a @ a.T
    m = m / np.linalg.norm(m) + margin * np.eye(3)
    return Tensor4.from_matrix(m, symmetrize=True)


def make_random_strain(rng: np.random.Generator) -> np.ndarray:
    a = rng.standard_normal((2, 2))
    return 0.5 * (a + a.T)


def make_random_normal(rng: np.random.Generator) -> np.ndarray:
    angle = rng.uniform(0.0, 2.0 * np.pi)
    return np.array([np.cos(angle), np.sin(angle)])


def make_square_mesh(h: float = 0.25, half: float = 1.0) -> Mesh:
    """Inclusion-free mesh of ``[-half, half]²``."""
    return generate_mesh(Rectangle((-half, -half), (half, half)), None, h)


def make_disk_tube_mesh(eps: float = 0.08, h: float = 0.15) -> tuple[Mesh, TubeRegion]:
    """Unit-disk mesh resolving a tube around the baseline segment."""
    tube = TubeRegion(Segment(SEGMENT_P0, SEGMENT_P1), eps)
    mesh = generate_mesh(Disk(), tube, h, refine_points=DISK_POINTS)
    return mesh, tube


def make_study_config(**overrides: Any) -> StudyConfig:
    """Small, fast study on the baseline geometry; top-level keys can be overridden."""
    data = _study_dict()
    data.update(overrides)
    return StudyConfig.model_validate(data)


def study_dict(**overrides: Any) -> dict[str, Any]:
    """Raw mapping behind :func:`make_study_config`."""
    data = _study_dict()
    data.update(overrides)
    return data


# -- Fixtures --


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(SEED)


@pytest.fixture(scope="session")
def square_space() -> Space:
    return build_space(make_square_mesh(), 2)


@pytest.fixture(scope="session")
def square_space_p1() -> Space:
    return build_space(make_square_mesh(), 1)


@pytest.fixture(scope="session")
def disk_tube() -> tuple[Space, TubeRegion]:
    mesh, tube = make_disk_tube_mesh()
    return build_space(mesh, 2), tube
