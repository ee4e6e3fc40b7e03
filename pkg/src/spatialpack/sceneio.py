"""Scene and result files.

Both are JSON: human-readable nested key/value structures with arrays.
Floats serialize through repr, which round-trips exactly, so reloading a
result and re-evaluating reproduces the stored objective bit for bit.
Timing is volatile and therefore excluded from result files unless
explicitly requested, keeping files byte-identical across repeated seeded
runs.
"""

from __future__ import annotations

import json
from typing import Union

import numpy as np

from .benchmarks import BenchmarkResult
from .boundary import BoundaryModel
from .constraints import ConstraintMode, full_violation
from .geometry import Body, Route
from .objectives import ObjectiveWeights, total_objective
from .problem import DomainBounds, ProblemSpec
from .solver import SolveReport


class SceneFormatError(ValueError):
    """Malformed scene or result file; message names the offending field."""


def _req(mapping: dict, key: str, where: str):
    if key not in mapping:
        raise SceneFormatError(f"missing field {key!r} in {where}")
    return mapping[key]


def _floats(value, where: str) -> np.ndarray:
    try:
        return np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SceneFormatError(f"field {where} is not numeric: {exc}") from None


def spec_to_dict(spec: ProblemSpec) -> dict:
    doc = {
        "name": spec.name,
        "bodies": [
            {
                "id": b.id,
                "spheres": np.column_stack([b.centers, b.radii]).tolist(),
                "ports": b.ports.tolist(),
                "mass": b.mass,
                "cog": b.cog_local.tolist(),
                "inertia": b.inertia_local.tolist(),
            }
            for b in spec.bodies
        ],
        "routes": [
            {
                "id": r.id,
                "from": list(r.a),
                "to": list(r.b),
                "control_points": r.n_control_points,
                "radius": r.radius,
                "exemption": r.exemption,
            }
            for r in spec.routes
        ],
        "boundary": None,
        "weights": {
            "routing": spec.weights.routing,
            "boundary": spec.weights.boundary,
            "cog": spec.weights.cog,
            "inertia": spec.weights.inertia,
            "volume": spec.weights.volume,
            "mean_distance": spec.weights.mean_distance,
            "routing_variant": spec.weights.routing_variant,
            "gamma": spec.weights.gamma,
            "alpha_volume": spec.weights.alpha_volume,
            "inertia_axis_weights": list(spec.weights.inertia_axis_weights),
        },
        "bounds": {
            "translation_low": spec.bounds.translation_low.tolist(),
            "translation_high": spec.bounds.translation_high.tolist(),
            "angle_low": spec.bounds.angle_low,
            "angle_high": spec.bounds.angle_high,
            "angle_margin": spec.bounds.angle_margin,
        },
        "constraints": {
            "mode": spec.constraint_mode.kind,
            "beta": spec.constraint_mode.beta,
            "eps": spec.constraint_mode.eps,
        },
        "cog_target": spec.cog_target.tolist(),
        "known_optimum": list(spec.known_optimum) if spec.known_optimum else None,
        "certificate": spec.certificate.tolist() if spec.certificate is not None else None,
    }
    if spec.boundary is not None:
        bm = spec.boundary
        doc["boundary"] = {
            "spheres": np.column_stack([bm.sphere_centers, bm.sphere_radii]).tolist(),
            "surface_points": bm.surface_points.tolist(),
            "alpha_union": bm.alpha_union,
            "alpha_points": bm.alpha_points,
            "beta": bm.beta,
            "delta_u": bm.delta_u,
            "delta_p": bm.delta_p,
            "w_union": bm.w_union,
            "w_points": bm.w_points,
        }
    return doc


def spec_from_dict(doc: dict) -> ProblemSpec:
    bodies = []
    for k, b in enumerate(_req(doc, "bodies", "scene")):
        where = f"bodies[{k}]"
        spheres = _floats(_req(b, "spheres", where), where + ".spheres").reshape(-1, 4)
        bodies.append(Body(
            id=str(_req(b, "id", where)),
            centers=spheres[:, :3],
            radii=spheres[:, 3],
            ports=_floats(b.get("ports", []), where + ".ports").reshape(-1, 3),
            mass=float(b.get("mass", 1.0)),
            cog_local=_floats(b.get("cog", [0, 0, 0]), where + ".cog"),
            inertia_local=_floats(b.get("inertia", np.zeros((3, 3))), where + ".inertia"),
        ))
    routes = []
    for k, r in enumerate(doc.get("routes", [])):
        where = f"routes[{k}]"
        routes.append(Route(
            id=str(_req(r, "id", where)),
            a=tuple(int(v) for v in _req(r, "from", where)),
            b=tuple(int(v) for v in _req(r, "to", where)),
            n_control_points=int(r.get("control_points", 0)),
            radius=float(r.get("radius", 0.0)),
            exemption=str(r.get("exemption", "auto")),
        ))
    boundary = None
    if doc.get("boundary") is not None:
        bdoc = doc["boundary"]
        spheres = _floats(_req(bdoc, "spheres", "boundary"), "boundary.spheres").reshape(-1, 4)
        boundary = BoundaryModel(
            sphere_centers=spheres[:, :3],
            sphere_radii=spheres[:, 3],
            surface_points=_floats(_req(bdoc, "surface_points", "boundary"),
                                   "boundary.surface_points").reshape(-1, 3),
            alpha_union=float(bdoc.get("alpha_union", 50.0)),
            alpha_points=float(bdoc.get("alpha_points", 50.0)),
            beta=float(bdoc.get("beta", 20.0)),
            delta_u=float(bdoc.get("delta_u", 0.01)),
            delta_p=float(bdoc.get("delta_p", 0.01)),
            w_union=float(bdoc.get("w_union", 1.0)),
            w_points=float(bdoc.get("w_points", 1.0)),
        )
    wdoc = doc.get("weights", {})
    weights = ObjectiveWeights(
        routing=float(wdoc.get("routing", 0.0)),
        boundary=float(wdoc.get("boundary", 0.0)),
        cog=float(wdoc.get("cog", 0.0)),
        inertia=float(wdoc.get("inertia", 0.0)),
        volume=float(wdoc.get("volume", 0.0)),
        mean_distance=float(wdoc.get("mean_distance", 0.0)),
        routing_variant=str(wdoc.get("routing_variant", "quadratic")),
        gamma=float(wdoc.get("gamma", 1.0)),
        alpha_volume=float(wdoc.get("alpha_volume", 50.0)),
        inertia_axis_weights=tuple(wdoc.get("inertia_axis_weights", (1.0, 1.0, 1.0))),
    )
    bdoc = doc.get("bounds", {})
    bounds = DomainBounds(
        translation_low=_floats(bdoc.get("translation_low", [-4, -4, -4]),
                                "bounds.translation_low"),
        translation_high=_floats(bdoc.get("translation_high", [4, 4, 4]),
                                 "bounds.translation_high"),
        angle_low=float(bdoc.get("angle_low", -np.pi)),
        angle_high=float(bdoc.get("angle_high", np.pi)),
        angle_margin=float(bdoc.get("angle_margin", np.pi / 4)),
    )
    cdoc = doc.get("constraints", {})
    mode = ConstraintMode(
        kind=str(cdoc.get("mode", "absolute")),
        beta=float(cdoc.get("beta", 50.0)),
        eps=float(cdoc.get("eps", 1e-3)),
    )
    opt = doc.get("known_optimum")
    cert = doc.get("certificate")
    return ProblemSpec(
        name=str(doc.get("name", "scene")),
        bodies=bodies, routes=routes, boundary=boundary,
        weights=weights, bounds=bounds, constraint_mode=mode,
        cog_target=_floats(doc.get("cog_target", [0, 0, 0]), "cog_target"),
        known_optimum=tuple(opt) if opt else None,
        certificate=np.asarray(cert, float) if cert is not None else None,
    )


def save_scene(path: str, spec: ProblemSpec) -> None:
    with open(path, "w") as fh:
        json.dump(spec_to_dict(spec), fh, indent=1)
        fh.write("\n")


def load_scene(path: str) -> ProblemSpec:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SceneFormatError(
                f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: "
                f"{exc.msg}") from None
    return spec_from_dict(doc)


def _geometry_snapshot(spec: ProblemSpec, x: np.ndarray) -> dict:
    world = spec.world(x)
    return {
        "bodies": [
            {"id": body.id,
             "world_spheres": np.column_stack([world.centers[i], body.radii]).tolist()}
            for i, body in enumerate(spec.bodies)
        ],
        "routes": [
            {"id": route.id, "polyline": world.route_nodes[r].tolist()}
            for r, route in enumerate(spec.routes)
        ],
    }


def result_to_dict(report: Union[SolveReport, BenchmarkResult], spec: ProblemSpec,
                   include_timing: bool = False, framework: str = "nested",
                   init_kind: str = "random", seed: int = 0) -> dict:
    if isinstance(report, BenchmarkResult):
        bench = report
        doc = {
            "scene": bench.spec_name,
            "framework": bench.framework,
            "init": bench.init_kind,
            "seed": bench.seed,
            "n_spheres": bench.n_spheres,
            "n_restarts": bench.n_restarts,
            "best": {
                "x": np.asarray(bench.best_x).tolist(),
                "f": bench.best_f,
                "violation": bench.best_violation,
                "converged": bench.best_converged,
                "exact_volume": bench.best_exact_volume,
                "routing_linear": bench.best_routing_linear,
                "gap_volume": bench.gap_volume,
                "gap_routing": bench.gap_routing,
                "suspicious_gap": bench.suspicious_gap,
            },
            "known_optimum": list(bench.known_optimum) if bench.known_optimum else None,
            "restarts": [
                {"index": r["index"], "f": r["f"], "violation": r["violation"],
                 "converged": r["converged"]}
                for r in bench.records
            ],
            "geometry": _geometry_snapshot(spec, np.asarray(bench.best_x)),
        }
        if bench.best_x0 is not None:
            doc["best"]["x0"] = np.asarray(bench.best_x0).tolist()
        if bench.seed_choice:
            doc["seed_choice"] = bench.seed_choice
        if include_timing:
            doc["timing"] = {
                "restart_wall_times": [r.get("wall_time") for r in bench.records],
            }
        return doc

    doc = {
        "scene": spec.name,
        "framework": framework,
        "init": init_kind,
        "seed": seed,
        "best": {
            "x": np.asarray(report.x_opt).tolist(),
            "f": report.f_opt,
            "breakdown": dict(report.breakdown),
            "violation": report.max_violation,
            "full_violation": report.full_violation,
            "converged": report.converged,
            "termination": report.termination,
            **{k: v for k, v in report.metrics.items()
               if isinstance(v, (int, float))},
        },
        "restarts": [
            {"index": r.index, "f": r.f, "violation": r.violation,
             "converged": r.converged}
            for r in report.restarts
        ],
        "geometry": _geometry_snapshot(spec, report.x_opt),
    }
    if include_timing:
        doc["timing"] = {
            "wall_time": report.wall_time,
            "inner_iterations": report.inner_iterations,
            "outer_iterations": report.outer_iterations,
        }
    return doc


def save_result(path: str, report, spec: ProblemSpec, include_timing: bool = False,
                **meta) -> None:
    with open(path, "w") as fh:
        json.dump(result_to_dict(report, spec, include_timing, **meta), fh, indent=1)
        fh.write("\n")


def load_result(path: str) -> dict:
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise SceneFormatError(
                f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: "
                f"{exc.msg}") from None


def validate_result(doc: dict, spec: ProblemSpec) -> dict:
    """Replay a result file against its scene.

    Re-evaluates the stored design vector and checks that the stored
    objective replays exactly, the constraint violation matches, and any
    known-optimum gaps are not meaningfully negative.
    """
    best = _req(doc, "best", "result")
    x = _floats(_req(best, "x", "result.best"), "result.best.x")
    if x.shape != (spec.dim,):
        raise SceneFormatError(
            f"result.best.x has length {x.size}, scene expects {spec.dim}")
    f_replay, _, _ = total_objective(x, spec)
    viol = full_violation(spec, x)
    checks = {
        "objective_replay_error": abs(f_replay - float(best.get("f", np.nan))),
        "objective_replayed": f_replay,
        "violation": viol,
        "feasible": viol <= 1e-6,
        "gap_ok": True,
    }
    if spec.known_optimum is not None:
        from .objectives import exact_aabb_volume, routing_length_linear
        world = spec.world(x)
        gap_v = exact_aabb_volume(world) - spec.known_optimum[0]
        gap_r = routing_length_linear(world) - spec.known_optimum[1]
        checks["gap_volume"] = gap_v
        checks["gap_routing"] = gap_r
        # Negative gaps indicate either a constraint bug or finite sphere
        # resolution letting geometry pass through ball gaps; flagged.
        checks["gap_ok"] = bool(min(gap_v, gap_r) >= -1e-6)
    checks["replay_ok"] = bool(checks["objective_replay_error"] <= 1e-9)
    checks["ok"] = bool(checks["replay_ok"] and checks["feasible"])
    return checks
