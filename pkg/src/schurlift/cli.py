"""JSON-in / JSON-out command line front end.

Subcommands ``solve``, ``certify``, and ``scan`` read a problem instance
document, dispatch to the pipelines, and print a report document.  Exit
codes: 0 solved, 2 infeasible, 3 inconclusive, 1 error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from .errors import SchurliftError, ParseError, ValidationError
from .kernels import KernelSpec
from .lifting_ball import (
    Infeasible,
    LiftResult,
    check_positivity,
    factorization_criterion,
    lift_ball,
    lift_p_gt_m,
    np_solve,
    verify_lift,
)
from .lifting_polydisc import Inconclusive, np_solve_polydisc
from .linalg import opnorm
from .model_space import build_subspace, model_tuple, np_target_operator
from .transfer import (
    GridSpec,
    grid_points,
    schur_agler_certificate_ball,
    sup_norm_scan,
    write_scan_csv,
)

MODES = ("np-ball", "lift-ball", "lift-pm", "lift-polydisc", "factorize", "certify")

EXIT_SOLVED = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2
EXIT_INCONCLUSIVE = 3


@dataclass
class Options:
    psd_tol: float = 1e-9
    verify_tol: float = 1e-7
    max_iter: int = 10000
    feasibility_tol: float = 1e-10
    samples: int = 200
    seed: int = 0
    grid: tuple[int, int, float] = (5, 8, 0.9)
    sample_radius: float = 0.9

    def to_dict(self) -> dict:
        return {
            "psd_tol": self.psd_tol,
            "verify_tol": self.verify_tol,
            "max_iter": self.max_iter,
            "feasibility_tol": self.feasibility_tol,
            "samples": self.samples,
            "seed": self.seed,
            "grid": list(self.grid),
            "sample_radius": self.sample_radius,
        }


@dataclass
class ProblemInstance:
    spec: KernelSpec
    d_target: int
    nodes: list[tuple[complex, ...]]
    targets: list[np.ndarray]
    mode: str
    p: int | None = None
    options: Options = field(default_factory=Options)


def _as_complex(value, path: str) -> complex:
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or not all(isinstance(v, (int, float)) for v in value)
    ):
        raise ParseError("complex numbers are [re, im] pairs", path)
    return complex(value[0], value[1])


def _get(doc: dict, key: str, types, path: str, required: bool = True, default=None):
    if key not in doc:
        if required:
            raise ParseError(f"missing field '{key}'", path)
        return default
    value = doc[key]
    if types is not None and not isinstance(value, types):
        raise ParseError(f"field '{key}' has wrong type", f"{path}.{key}")
    return value


def parse_instance(text: str) -> ProblemInstance:
    """Parse and validate an instance document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}")
    if not isinstance(doc, dict):
        raise ParseError("instance document must be a JSON object")

    geometry = _get(doc, "geometry", str, "$")
    n = _get(doc, "n", int, "$")
    d_e = _get(doc, "dE", int, "$")
    d_star = _get(doc, "dEstar", int, "$")
    mode = _get(doc, "mode", str, "$")
    if mode not in MODES:
        raise ValidationError(f"mode must be one of {MODES}, got {mode!r}", "$.mode")

    if geometry == "ball":
        m = _get(doc, "m", int, "$")
        try:
            spec = KernelSpec.ball(m, n, d_e)
        except ValueError as exc:
            raise ValidationError(str(exc), "$.m")
    elif geometry == "polydisc":
        gamma = _get(doc, "gamma", list, "$")
        if len(gamma) != n or not all(isinstance(g, int) for g in gamma):
            raise ValidationError("gamma must be a list of n integers", "$.gamma")
        try:
            spec = KernelSpec.polydisc(gamma, d_e)
        except ValueError as exc:
            raise ValidationError(str(exc), "$.gamma")
    else:
        raise ValidationError("geometry must be 'ball' or 'polydisc'", "$.geometry")

    p = _get(doc, "p", int, "$", required=(mode in ("lift-pm", "factorize")), default=None)
    if p is not None:
        if geometry != "ball":
            raise ValidationError("the p > m pipeline needs ball geometry", "$.p")
        if p <= spec.m:
            raise ValidationError(f"p must exceed m, got p={p}, m={spec.m}", "$.p")

    raw_nodes = _get(doc, "nodes", list, "$")
    if not raw_nodes:
        raise ValidationError("at least one node is required", "$.nodes")
    nodes = []
    for j, raw in enumerate(raw_nodes):
        path = f"$.nodes[{j}]"
        if not isinstance(raw, list) or len(raw) != n:
            raise ParseError(f"node must have {n} coordinates", path)
        z = tuple(_as_complex(c, f"{path}[{i}]") for i, c in enumerate(raw))
        try:
            spec.require_interior(z)
        except SchurliftError as exc:
            raise ValidationError(str(exc), path)
        nodes.append(z)
    if len(set(nodes)) != len(nodes):
        raise ValidationError("nodes must be pairwise distinct", "$.nodes")

    raw_targets = _get(doc, "targets", list, "$")
    if len(raw_targets) != len(nodes):
        raise ValidationError(
            f"got {len(raw_targets)} targets for {len(nodes)} nodes", "$.targets"
        )
    targets = []
    for j, raw in enumerate(raw_targets):
        path = f"$.targets[{j}]"
        if not isinstance(raw, list) or len(raw) != d_star:
            raise ValidationError(f"target must have {d_star} rows", path)
        rows = []
        for a, raw_row in enumerate(raw):
            if not isinstance(raw_row, list) or len(raw_row) != d_e:
                raise ValidationError(f"target row must have {d_e} entries", f"{path}[{a}]")
            rows.append([_as_complex(c, f"{path}[{a}][{b}]") for b, c in enumerate(raw_row)])
        targets.append(np.array(rows, dtype=complex))

    options = Options()
    raw_opts = _get(doc, "options", dict, "$", required=False, default={})
    for key in ("psd_tol", "verify_tol", "feasibility_tol", "sample_radius"):
        if key in raw_opts:
            options.__setattr__(key, float(raw_opts[key]))
    for key in ("max_iter", "samples", "seed"):
        if key in raw_opts:
            options.__setattr__(key, int(raw_opts[key]))
    if "grid" in raw_opts:
        g = raw_opts["grid"]
        if not isinstance(g, list) or len(g) != 3:
            raise ValidationError("grid is [radii, angles, radius]", "$.options.grid")
        options.grid = (int(g[0]), int(g[1]), float(g[2]))

    return ProblemInstance(
        spec=spec,
        d_target=d_star,
        nodes=nodes,
        targets=targets,
        mode=mode,
        p=p,
        options=options,
    )


def _pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _matrix_json(mat: np.ndarray) -> list:
    return [[_pair(v) for v in row] for row in np.atleast_2d(mat)]


def instance_to_dict(inst: ProblemInstance) -> dict:
    doc = {
        "geometry": inst.spec.geometry,
        "m": inst.spec.m,
        "gamma": list(inst.spec.gamma) if inst.spec.gamma else None,
        "n": inst.spec.n,
        "dE": inst.spec.d_coeff,
        "dEstar": inst.d_target,
        "nodes": [[_pair(c) for c in z] for z in inst.nodes],
        "targets": [_matrix_json(w) for w in inst.targets],
        "mode": inst.mode,
        "options": inst.options.to_dict(),
    }
    if inst.p is not None:
        doc["p"] = inst.p
    return doc


def _sample_points(inst: ProblemInstance, count: int) -> list[tuple[complex, ...]]:
    rng = np.random.default_rng(inst.options.seed)
    n = inst.spec.n
    radius = inst.options.sample_radius
    points = []
    for _ in range(count):
        if inst.spec.geometry == "ball":
            direction = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            direction /= np.linalg.norm(direction)
            r = radius * rng.uniform() ** (1.0 / (2 * n))
            points.append(tuple(r * direction))
        else:
            coords = []
            for _ in range(n):
                r = radius * np.sqrt(rng.uniform())
                coords.append(r * np.exp(2j * np.pi * rng.uniform()))
            points.append(tuple(coords))
    return points


def _node_table(inst: ProblemInstance, phi_eval) -> tuple[list[dict], float]:
    rows = []
    worst = 0.0
    for z, w in zip(inst.nodes, inst.targets):
        value = np.atleast_2d(np.asarray(phi_eval(z), dtype=complex))
        residual = opnorm(value - w)
        worst = max(worst, residual)
        rows.append(
            {
                "z": [_pair(c) for c in z],
                "target": _matrix_json(w),
                "phi": _matrix_json(value),
                "residual": residual,
            }
        )
    return rows, worst


def _base_report(inst: ProblemInstance) -> dict:
    return {
        "mode": inst.mode,
        "options_used": inst.options.to_dict(),
        "status": None,
        "certificates": {},
        "colligation": None,
        "nodes": [],
    }


def _finish_solved(report: dict, inst: ProblemInstance, result: LiftResult, phi_eval) -> int:
    cert = result.certificate
    rows, worst = _node_table(inst, phi_eval)
    report["nodes"] = rows
    report["certificates"].update(
        {
            "delta_min_eig": cert.delta_min_eig,
            "generating_residual": cert.generating_residual,
            "verify_residual": cert.verify_residual,
            "max_node_residual": worst,
            "colligation_norm": result.colligation.norm,
            "unitary_defect": result.colligation.unitary_defect,
        }
    )
    if cert.series_residual is not None:
        report["certificates"]["series_residual"] = cert.series_residual
        report["certificates"]["series_order"] = cert.series_order
    for key in ("pick_weight_m_min_eig", "pick_weight_1_min_eig", "pick_min_eig"):
        if key in cert.extras:
            report["certificates"][key] = cert.extras[key]
    if "hereditary_difference_residual" in cert.extras:
        report["certificates"]["hereditary_difference_residual"] = cert.extras[
            "hereditary_difference_residual"
        ]
    if "decomposition" in cert.extras:
        report["certificates"]["feasibility"] = cert.extras["decomposition"].to_json_dict()
    report["colligation"] = result.colligation.to_json_dict()
    if cert.verify_residual > inst.options.verify_tol:
        report["status"] = "error"
        report["error"] = {
            "type": "VerificationFailure",
            "message": f"lift verification residual {cert.verify_residual:.3e} "
            f"exceeds {inst.options.verify_tol:.3e}",
        }
        return EXIT_ERROR
    report["status"] = "solved"
    return EXIT_SOLVED


def _finish_infeasible(report: dict, outcome: Infeasible) -> int:
    report["status"] = "infeasible"
    report["certificates"].update(
        {
            "failed_test": outcome.which,
            "pick_min_eig": outcome.pick_min_eig,
            "delta_min_eig": outcome.delta_min_eig,
        }
    )
    return EXIT_INFEASIBLE


def _finish_inconclusive(report: dict, outcome: Inconclusive) -> int:
    report["status"] = "inconclusive"
    report["certificates"].update(
        {
            "iterations": outcome.iterations,
            "reconstruction_residual": outcome.residuals.get("reconstruction"),
            "cone_min_eigs": list(outcome.residuals.get("cone_min_eigs", [])),
            "summand_min_eigs": list(outcome.residuals.get("summand_min_eigs", [])),
        }
    )
    return EXIT_INCONCLUSIVE


def _solve_ball_np(inst: ProblemInstance, report: dict) -> int:
    outcome = np_solve(inst.spec, inst.nodes, inst.targets, d_target=inst.d_target,
                       psd_base_tol=inst.options.psd_tol)
    if isinstance(outcome, Infeasible):
        return _finish_infeasible(report, outcome)
    return _finish_solved(report, inst, outcome, outcome.phi)


def _solve_lift_ball(inst: ProblemInstance, report: dict) -> int:
    """Direct lift over the spans, without the interpolation pre-screen."""
    q1 = build_subspace(inst.spec, inst.nodes)
    q2 = build_subspace(inst.spec.with_coeff_dim(inst.d_target), inst.nodes)
    t = model_tuple(q1)
    s = model_tuple(q2)
    x = np_target_operator(q1, inst.targets, q2)
    norm_x = opnorm(x)
    if norm_x > 1.0 + 1e-10:
        report["certificates"]["intertwiner_norm"] = norm_x
        return _finish_infeasible(
            report,
            Infeasible(which="contractivity", pick_min_eig=1.0 - norm_x**2,
                       pick_matrix=np.zeros((0, 0))),
        )
    pos = check_positivity(s, x, inst.spec.m)
    if pos.min_eig < -inst.options.psd_tol * (1.0 + opnorm(pos.matrix)):
        return _finish_infeasible(
            report,
            Infeasible(which="positivity-gap", pick_min_eig=pos.min_eig,
                       pick_matrix=pos.matrix, delta_min_eig=pos.min_eig),
        )
    result = lift_ball(
        t, s, x, inst.spec.m,
        in_map=q2.coeff_map_at_zero(),
        out_map=q1.coeff_map_at_zero(),
    )
    result.certificate.verify_residual = verify_lift(result.phi, q2, x, q1)
    return _finish_solved(report, inst, result, result.phi)


def _solve_lift_pm(inst: ProblemInstance, report: dict):
    q1 = build_subspace(inst.spec, inst.nodes)
    spec_p = KernelSpec.ball(inst.p, inst.spec.n, inst.d_target)
    q2 = build_subspace(spec_p, inst.nodes)
    x = np_target_operator(q1, inst.targets, q2)
    composite = lift_p_gt_m(q1, q2, x)
    report["certificates"].update(
        {
            "dilation_isometry_residual": composite.dilation.isometry_residual,
            "positivity_min_eigs": list(composite.positivity_min_eigs),
        }
    )
    inner = composite.inner
    inner.certificate.verify_residual = composite.verify_residual
    code = _finish_solved(report, inst, inner, composite.composite)
    return code, composite


def _solve_polydisc(inst: ProblemInstance, report: dict) -> int:
    outcome = np_solve_polydisc(
        inst.spec,
        inst.nodes,
        inst.targets,
        d_target=inst.d_target,
        psd_base_tol=inst.options.psd_tol,
        feasibility_tol=inst.options.feasibility_tol,
        max_iter=inst.options.max_iter,
    )
    if isinstance(outcome, Infeasible):
        return _finish_infeasible(report, outcome)
    if isinstance(outcome, Inconclusive):
        return _finish_inconclusive(report, outcome)
    return _finish_solved(report, inst, outcome, outcome.phi)


def run(inst: ProblemInstance, *, csv_stream=None, certify: bool = False) -> tuple[dict, int]:
    """Execute an instance and return (report document, exit code)."""
    report = _base_report(inst)
    try:
        if inst.mode == "np-ball":
            code = _solve_ball_np(inst, report)
            phi_holder = None
        elif inst.mode == "lift-ball":
            code = _solve_lift_ball(inst, report)
            phi_holder = None
        elif inst.mode in ("lift-pm", "factorize"):
            code, composite = _solve_lift_pm(inst, report)
            if code == EXIT_SOLVED and inst.mode == "factorize":
                points = _sample_points(inst, inst.options.samples)
                crit = factorization_criterion(
                    composite.composite, inst.spec.m, inst.p, points,
                    tol=1e-7, n=inst.spec.n,
                )
                report["certificates"]["factorization"] = {
                    "min_eig": crit.min_eig,
                    "pass": crit.passed,
                    "samples": crit.sample_count,
                }
            phi_holder = composite.composite if code == EXIT_SOLVED else None
        elif inst.mode in ("lift-polydisc", "certify"):
            if inst.spec.geometry == "polydisc":
                code = _solve_polydisc(inst, report)
            else:
                code = _solve_ball_np(inst, report)
            phi_holder = None
        else:  # pragma: no cover - parse_instance guards the mode set
            raise ValidationError(f"unsupported mode {inst.mode}")

        needs_phi = code == EXIT_SOLVED and (certify or csv_stream is not None
                                             or inst.mode == "certify")
        if needs_phi and phi_holder is None:
            phi_holder = _rebuild_phi(inst)

        if code == EXIT_SOLVED and (certify or inst.mode == "certify"):
            if inst.spec.geometry == "ball":
                points = _sample_points(inst, inst.options.samples)
                crit = schur_agler_certificate_ball(phi_holder, points, tol=1e-7)
                report["certificates"]["schur_agler"] = {
                    "min_eig": crit.min_eig,
                    "pass": crit.passed,
                    "samples": crit.sample_count,
                }
            else:
                grid = GridSpec(*inst.options.grid)
                scan = sup_norm_scan(
                    phi_holder, grid_points(grid, inst.spec.geometry, inst.spec.n)
                )
                report["certificates"]["sup_norm"] = {
                    "max": scan.max_norm,
                    "points": len(scan.rows),
                }
        if code == EXIT_SOLVED and csv_stream is not None:
            grid = GridSpec(*inst.options.grid)
            scan = sup_norm_scan(
                phi_holder, grid_points(grid, inst.spec.geometry, inst.spec.n)
            )
            write_scan_csv(scan, inst.spec.n, csv_stream)
            report["certificates"]["sup_norm"] = {
                "max": scan.max_norm,
                "points": len(scan.rows),
            }
        return report, code
    except SchurliftError as exc:
        report["status"] = "error"
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
        return report, EXIT_ERROR
    except Exception as exc:  # noqa: BLE001 - the contract is report-not-crash
        report["status"] = "error"
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
        return report, EXIT_ERROR


def _rebuild_phi(inst: ProblemInstance):
    """Re-run the solve to obtain the evaluator for certification passes."""
    if inst.spec.geometry == "ball":
        if inst.mode in ("lift-pm", "factorize"):
            q1 = build_subspace(inst.spec, inst.nodes)
            q2 = build_subspace(
                KernelSpec.ball(inst.p, inst.spec.n, inst.d_target), inst.nodes
            )
            x = np_target_operator(q1, inst.targets, q2)
            return lift_p_gt_m(q1, q2, x).composite
        outcome = np_solve(inst.spec, inst.nodes, inst.targets, d_target=inst.d_target)
        return outcome.phi
    outcome = np_solve_polydisc(
        inst.spec,
        inst.nodes,
        inst.targets,
        d_target=inst.d_target,
        feasibility_tol=inst.options.feasibility_tol,
        max_iter=inst.options.max_iter,
    )
    return outcome.phi


def report_to_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2)


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("instance", help="path to the instance JSON document")
    parser.add_argument("--psd-tol", type=float, default=None)
    parser.add_argument("--verify-tol", type=float, default=None)
    parser.add_argument("--max-iter", type=int, default=None)
    parser.add_argument("--samples", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument(
        "--grid", type=str, default=None, help="grid as RADII:ANGLES:RADIUS"
    )
    parser.add_argument("--out", type=str, default=None, help="write the report here")


def _apply_flags(inst: ProblemInstance, args) -> None:
    if args.psd_tol is not None:
        inst.options.psd_tol = args.psd_tol
    if args.verify_tol is not None:
        inst.options.verify_tol = args.verify_tol
    if args.max_iter is not None:
        inst.options.max_iter = args.max_iter
    if args.samples is not None:
        inst.options.samples = args.samples
    if args.seed is not None:
        inst.options.seed = args.seed
    if args.grid is not None:
        parts = args.grid.split(":")
        if len(parts) != 3:
            raise ValidationError("grid flag is RADII:ANGLES:RADIUS", "--grid")
        inst.options.grid = (int(parts[0]), int(parts[1]), float(parts[2]))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="schurlift",
        description="interpolation and intertwining lifting on weighted Bergman spaces",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("solve", "run the instance's mode and print the report"),
        ("certify", "solve, then certify the emitted function by sampling"),
        ("scan", "solve, then scan the sup norm over a grid and emit CSV"),
    ):
        p = sub.add_parser(name, help=helptext)
        _add_common_flags(p)
        if name == "scan":
            p.add_argument("--csv-out", type=str, default="scan.csv")

    args = parser.parse_args(argv)
    try:
        with open(args.instance, "r", encoding="utf-8") as fh:
            inst = parse_instance(fh.read())
        _apply_flags(inst, args)
    except (OSError, SchurliftError) as exc:
        report = {"status": "error", "error": {"type": type(exc).__name__, "message": str(exc)}}
        print(report_to_json(report))
        return EXIT_ERROR

    csv_stream = None
    if args.command == "scan":
        csv_stream = open(args.csv_out, "w", encoding="utf-8")
    try:
        report, code = run(inst, csv_stream=csv_stream, certify=args.command == "certify")
    finally:
        if csv_stream is not None:
            csv_stream.close()
    text = report_to_json(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)
    return code


def console_main() -> None:
    sys.exit(main())
