"""Command-line front end for the elastic moment tensor lab.

Usage::

    emt-lab check-tensor '{"lambda": 1, "mu": 1}'
    emt-lab emt '{"lambda": 1, "mu": 1}' '{"lambda": 2, "mu": 3}' --normal 0,1
    emt-lab solve       --config configs/baseline.json --eps 0.02 --out out/
    emt-lab neumann     --config configs/baseline.json --point 1 --direction 1
    emt-lab convergence --config configs/baseline.json --out out/ --jobs 2
    emt-lab mesh-export --config configs/baseline.json --eps 0.02 --out out/

Exit codes: 0 success, 1 acceptance failed, 2 invalid input or config,
3 non-convex or asymmetric tensor, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from collections.abc import Callable
from pathlib import Path
from typing import Any

import numpy as np
import structlog
import yaml
from pydantic import ValidationError

from emt_lab.asymptotics import (
    check_geometry,
    convergence_study,
    run_case,
    study_mesh,
    study_tube,
    write_rows_csv,
)
from emt_lab.config.study import StudyConfig, load_study_config
from emt_lab.config.validators import parse_float_list
from emt_lab.emt import (
    Convention,
    bounds_check,
    check_unit,
    isotropic_moment_coeffs,
    isotropic_moment_coeffs_consistent,
    moment_tensor,
    transmission_solve,
)
from emt_lab.errors import (
    EXIT_ACCEPTANCE,
    EXIT_INPUT,
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_TENSOR,
    InvalidInputError,
    LabError,
    user_message,
)
from emt_lab.fem.assembly import Phases, boundary_mass, skew_functional
from emt_lab.fem.elements import build_space
from emt_lab.fem.field import write_field_csv
from emt_lab.fem.mesh import write_mesh
from emt_lab.fem.solver import ConstrainedSystem, neumann_field, neumann_load
from emt_lab.telemetry import configure_logging, telemetry_session
from emt_lab.tensor_core import (
    SYMMETRY_TOL,
    SymMat2,
    Tensor4,
    convexity_margin,
    is_isotropic,
    mandel_from_json,
    symmetry_residual,
)

log = structlog.get_logger()

DEFAULT_SEED = 0
DEFAULT_SAMPLES = 100


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _load_json_arg(value: str) -> dict[str, Any]:
    """Inline JSON object, or the path of a file holding one."""
    path = Path(value)
    text = path.read_text() if path.is_file() else value
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        msg = f"cannot parse tensor JSON: {exc}"
        raise InvalidInputError(msg) from exc
    if not isinstance(obj, dict):
        msg = f"tensor JSON must be an object, got {type(obj).__name__}"
        raise InvalidInputError(msg)
    return obj


def _tensor_arg(value: str) -> Tensor4:
    return Tensor4(mandel_from_json(_load_json_arg(value)))


def _print_matrix(title: str, m: np.ndarray) -> None:
    print(f"{title}:")
    for row in np.atleast_2d(m):
        print("  " + "  ".join(f"{x: .12g}" for x in row))


def _fmt(v: np.ndarray) -> str:
    return "(" + ", ".join(f"{x:.6e}" for x in v) + ")"


def _load_config(args: argparse.Namespace) -> StudyConfig:
    config = load_study_config(Path(args.config))
    updates: dict[str, Any] = {}
    if getattr(args, "quad_order", None) is not None:
        updates["quad_order"] = args.quad_order
    if getattr(args, "seed", None) is not None:
        updates["seed"] = args.seed
    return config.model_copy(update=updates) if updates else config


def _out_dir(args: argparse.Namespace) -> Path | None:
    if args.out is None:
        return None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _coeff_line(coeffs: tuple[float, ...]) -> str:
    return " ".join(f"{k}={v:.12g}" for k, v in zip("abcd", coeffs, strict=True))


def _random_strains(rng: np.random.Generator, count: int) -> list[SymMat2]:
    out: list[SymMat2] = []
    for _ in range(count):
        a = rng.standard_normal((2, 2))
        out.append(SymMat2.from_matrix(0.5 * (a + a.T)))
    return out


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _cmd_check_tensor(args: argparse.Namespace) -> int:
    """Report symmetry, convexity margin and isotropy of one tensor."""
    m = mandel_from_json(_load_json_arg(args.tensor))
    _print_matrix("mandel", m)
    residual = symmetry_residual(m)
    print(f"symmetry residual: {residual:.3e}")
    if residual > SYMMETRY_TOL * max(1.0, float(np.abs(m).max())):
        print(f"symmetry violation: |M - M^T| max entry {residual:.3e}", file=sys.stderr)
        return EXIT_TENSOR
    c = Tensor4(m)
    margin = convexity_margin(c)
    print(f"convexity margin: {margin:.12g}")
    lame = is_isotropic(c)
    if lame is None:
        print("isotropic: no")
    else:
        print(f"isotropic: yes (lambda={lame[0]:.12g}, mu={lame[1]:.12g})")
    if margin <= 0.0:
        print(f"non-convex tensor: margin {margin:.6g}", file=sys.stderr)
        return EXIT_TENSOR
    return EXIT_OK


def _cmd_emt(args: argparse.Namespace) -> int:
    """Moment tensors, closed forms, oracle residual and bounds for one phase pair."""
    c0, c1 = _tensor_arg(args.c0), _tensor_arg(args.c1)
    n = check_unit(parse_float_list(args.normal, 2, "--normal"))
    t = moment_tensor(c0, c1, n, Convention.EXPANSION)
    m_tilde = t.as_convention(Convention.CONSTRUCTIVE)
    _print_matrix("T (expansion)", t.tensor.mandel)
    _print_matrix("M~ (constructive)", m_tilde.tensor.mandel)

    lame0, lame1 = is_isotropic(c0), is_isotropic(c1)
    if lame0 is not None and lame1 is not None:
        printed = isotropic_moment_coeffs(*lame0, *lame1)
        consistent = isotropic_moment_coeffs_consistent(*lame0, *lame1)
        print("coefficients (printed):    " + _coeff_line(printed))
        print("coefficients (consistent): " + _coeff_line(consistent))

    rng = np.random.default_rng(args.seed)
    strains = _random_strains(rng, args.samples)
    contrast = c1.mandel - c0.mandel
    worst = 0.0
    lower_ok = upper_ok = 0
    for e in strains:
        e_int = transmission_solve(c0, c1, n, e).e_int
        gap = contrast @ e_int.to_mandel() - t.tensor.mandel @ e.to_mandel()
        worst = max(worst, float(np.linalg.norm(gap)) / max(e.norm(), 1e-300))
        report = bounds_check(c0, c1, t, e)
        lower_ok += report.lower_ok
        upper_ok += report.upper_ok
    print(f"oracle residual: {worst:.3e}")
    print(f"lower bound: {lower_ok}/{len(strains)} samples hold")
    print(f"upper bound: {upper_ok}/{len(strains)} samples hold")
    return EXIT_OK


def _cmd_solve(args: argparse.Namespace) -> int:
    """Single-ε comparison of the direct difference with both right sides."""
    config = _load_config(args)
    eps = args.eps if args.eps is not None else config.eps[-1]
    check_geometry(config, eps)
    case = run_case(config, eps, keep_fields=args.out is not None)
    for row in case.rows:
        print(f"y{row.point + 1}: lhs={_fmt(row.lhs)}")
        print(f"    rhs_exp={_fmt(row.rhs_exp)} resid_exp={row.resid_exp:.6e}")
        print(f"    rhs_neg={_fmt(row.rhs_neg)} resid_neg={row.resid_neg:.6e}")
    first = case.rows[0]
    print(
        f"eps={eps:g} area={first.area:.6e} "
        f"l2_diff={first.l2_diff:.6e} h1_diff={first.h1_diff:.6e}"
    )
    out = _out_dir(args)
    if out is not None:
        write_rows_csv(case.rows, out / config.output.csv)
        for name, fld in case.fields.items():
            write_field_csv(fld, out / f"u_{name}.csv")
    return EXIT_OK


def _cmd_neumann(args: argparse.Namespace) -> int:
    """Neumann column at one measurement point with its load balance."""
    config = _load_config(args)
    if not 1 <= args.point <= len(config.measure_points):
        msg = f"--point must lie in 1..{len(config.measure_points)}, got {args.point}"
        raise InvalidInputError(msg)
    if args.eps is not None:
        check_geometry(config, args.eps)
    tube = None if args.eps is None else study_tube(config, args.eps)
    space = build_space(study_mesh(config, tube), config.mesh.order)
    c0 = config.phases.background.to_tensor()
    y = config.measure_points[args.point - 1]
    k = args.direction - 1
    nl = neumann_load(space, y, k, config.torque_correction)
    system = ConstrainedSystem(space, Phases.homogeneous(c0))
    col = neumann_field(
        space, c0, y, k, torque_correction=config.torque_correction, system=system
    )
    force = system.modes[:, :2].T @ nl.vector
    print(f"node: {nl.node} at ({y[0]:g}, {y[1]:g}), direction e{args.direction}")
    print(f"net force: ({nl.net_force[0]:.3e}, {nl.net_force[1]:.3e}) -> {_fmt(force)}")
    print(f"torque: {nl.torque_before:.6e} -> {nl.torque_after:.3e} ({config.torque_correction})")
    mean = boundary_mass(space) @ col.values
    skew = float(skew_functional(space) @ col.dofs)
    print(f"normalization: boundary integral={_fmt(mean)} skew integral={skew:.3e}")
    out = _out_dir(args)
    if out is not None:
        write_field_csv(col, out / f"neumann_y{args.point}_k{args.direction}.csv")
    return EXIT_OK


def _cmd_convergence(args: argparse.Namespace) -> int:
    """Full ε sweep with CSV and JSON artifacts."""
    config = _load_config(args)
    report = convergence_study(config, jobs=args.jobs)
    out = _out_dir(args) or Path()
    report.write_csv(out / config.output.csv)
    report.write_summary(out / config.output.summary)
    summary = report.summary
    print(f"winner: {summary.winner or 'none'}")
    for note in summary.notes:
        print(f"note: {note}")
    for name, crit in summary.criteria.items():
        verdict = {True: "pass", False: "FAIL", None: "n/a"}[crit.passed]
        print(f"{name}: {verdict} (value={crit.value}, threshold={crit.threshold})")
    return EXIT_OK if report.passed else EXIT_ACCEPTANCE


def _cmd_mesh_export(args: argparse.Namespace) -> int:
    """Write the study mesh at one ε (or without tube) in the text format."""
    config = _load_config(args)
    if args.eps is not None:
        check_geometry(config, args.eps)
    tube = None if args.eps is None else study_tube(config, args.eps)
    mesh = study_mesh(config, tube)
    out = _out_dir(args) or Path()
    name = "mesh.txt" if args.eps is None else f"mesh_eps{args.eps:g}.txt"
    write_mesh(mesh, out / name)
    print(f"{out / name}: {mesh.n_nodes} nodes, {mesh.n_triangles} triangles")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _positive_int(value: str) -> int:
    number = int(value)
    if number < 1:
        msg = f"expected a positive integer, got {value}"
        raise argparse.ArgumentTypeError(msg)
    return number


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emt-lab",
        description="Elastic moment tensors and thin-inclusion boundary asymptotics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-tensor", help="Inspect an elasticity tensor")
    p.add_argument("tensor", help="Tensor JSON object or path to a JSON file")

    p = sub.add_parser("emt", help="Moment tensor of a phase pair")
    p.add_argument("c0", help="Background tensor JSON or path")
    p.add_argument("c1", help="Inclusion tensor JSON or path")
    p.add_argument("--normal", required=True, help="Unit normal as 'nx,ny'")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="Seed of the sampled strains")
    p.add_argument("--samples", type=_positive_int, default=DEFAULT_SAMPLES)

    for name, help_text in [
        ("solve", "Compare both sides of the expansion at one ε"),
        ("neumann", "Neumann column at a measurement point"),
        ("convergence", "Run an ε-convergence study"),
        ("mesh-export", "Write a study mesh"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="Study file (JSON or YAML)")
        p.add_argument("--out", default=None, help="Output directory")
        p.add_argument("--seed", type=int, default=None, help="Override the study seed")
        p.add_argument("--quad-order", type=_positive_int, default=None)
        if name == "convergence":
            p.add_argument("--jobs", type=_positive_int, default=1, help="Parallel ε cases")
        else:
            p.add_argument("--eps", type=float, default=None, help="Tube half-width")
        if name == "neumann":
            p.add_argument("--point", type=_positive_int, default=1, help="1-based y index")
            p.add_argument("--direction", type=int, choices=(1, 2), default=1)
    return parser


_COMMANDS: dict[str, Callable[[argparse.Namespace], int]] = {
    "check-tensor": _cmd_check_tensor,
    "emt": _cmd_emt,
    "solve": _cmd_solve,
    "neumann": _cmd_neumann,
    "convergence": _cmd_convergence,
    "mesh-export": _cmd_mesh_export,
}


def main(argv: list[str] | None = None) -> int:
    """Entry point for the emt-lab CLI."""
    args = _build_parser().parse_args(argv)
    configure_logging()
    try:
        with telemetry_session():
            return _COMMANDS[args.command](args)
    except LabError as exc:
        print(user_message(exc), file=sys.stderr)
        return exc.exit_code
    except ValidationError as exc:
        print("invalid config:", file=sys.stderr)
        for err in exc.errors():
            loc = " → ".join(str(part) for part in err["loc"])
            print(f"  [{loc}] {err['msg']}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, yaml.YAMLError, OSError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:
        log.exception("unexpected_failure", command=args.command)
        print(user_message(exc), file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    raise SystemExit(main())
