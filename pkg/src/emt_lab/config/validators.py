"""Shared validators for config models and command-line arguments."""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from emt_lab.tensor_core import SYMMETRY_TOL


def check_strictly_decreasing(values: Sequence[float], name: str) -> None:
    """Raise ``ValueError`` unless *values* are positive and strictly decreasing."""
    if any(v <= 0.0 for v in values):
        msg = f"{name} must be positive, got {list(values)}"
        raise ValueError(msg)
    if any(b >= a for a, b in zip(values, values[1:], strict=False)):
        msg = f"{name} must be strictly decreasing, got {list(values)}"
        raise ValueError(msg)


def check_symmetric_2x2(rows: Sequence[Sequence[float]], name: str) -> None:
    """Raise ``ValueError`` unless *rows* is a symmetric 2×2 matrix."""
    m = np.asarray(rows, dtype=np.float64)
    if m.shape != (2, 2):
        msg = f"{name} must be a 2×2 matrix, got shape {m.shape}"
        raise ValueError(msg)
    if abs(m[0, 1] - m[1, 0]) > SYMMETRY_TOL * max(1.0, float(np.abs(m).max())):
        msg = f"{name} must be symmetric, got off-diagonals {m[0, 1]} and {m[1, 0]}"
        raise ValueError(msg)


def parse_float_list(text: str, size: int, name: str) -> list[float]:
    """Parse ``"a,b"`` or ``"a b"`` into exactly *size* floats."""
    parts = [p for p in text.replace(",", " ").split() if p]
    if len(parts) != size:
        msg = f"{name} needs {size} numbers, got {text!r}"
        raise ValueError(msg)
    return [float(p) for p in parts]
