"""Command line interface.

Subcommands: solve a scene file, run a named benchmark, validate a result
file against its scene, decompose a primitive shape, and enumerate the
grid-aligned optima of an analytical benchmark.  Exit code 0 means the
requested run converged to a feasible point (or the validation passed).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import benchmarks, sceneio
from .frameworks import GaParams, InitMethod, atc_solve, nested_solve, soi_solve
from .objectives import PRESETS, preset_weights
from .solver import SolverOptions


def _add_run_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--framework", choices=("nested", "atc", "soi"), default="nested")
    p.add_argument("--init", choices=("random", "es", "ga", "manual"), default="random")
    p.add_argument("--restarts", type=int, default=1)
    p.add_argument("--preset", choices=sorted(PRESETS), default=None,
                   help="objective preset overriding the scene weights")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int,
                   default=int(os.environ.get("SPATIALPACK_JOBS", "1")),
                   help="parallel restart workers (default $SPATIALPACK_JOBS or 1)")
    p.add_argument("--x0", type=str, default=None,
                   help="JSON file or inline JSON array for manual init")
    p.add_argument("--out", type=str, default=None, help="result file path")
    p.add_argument("--timing", action="store_true",
                   help="include volatile timing data in the result file")
    p.add_argument("--tol-feas", type=float, default=1e-6)
    p.add_argument("--tol-grad", type=float, default=1e-6)
    p.add_argument("--inner-maxiter", type=int, default=500)
    p.add_argument("--outer-maxiter", type=int, default=30)
    p.add_argument("--ga-population", type=int, default=30)
    p.add_argument("--ga-generations", type=int, default=40)


def _make_init(args, spec) -> InitMethod:
    x0 = None
    if args.init == "manual":
        if args.x0 is None:
            raise SystemExit("manual init requires --x0 (file or JSON array)")
        if os.path.exists(args.x0):
            with open(args.x0) as fh:
                x0 = np.asarray(json.load(fh), dtype=float)
        else:
            x0 = np.asarray(json.loads(args.x0), dtype=float)
    ga = GaParams(population=args.ga_population, generations=args.ga_generations)
    return InitMethod(kind=args.init, seed=args.seed, x0=x0, ga=ga)


def _run(spec, args) -> int:
    opts = SolverOptions(tol_feas=args.tol_feas, tol_grad=args.tol_grad,
                         inner_maxiter=args.inner_maxiter,
                         outer_maxiter=args.outer_maxiter)
    weights = preset_weights(args.preset) if args.preset else None
    init = _make_init(args, spec)
    if args.framework == "nested":
        report = nested_solve(spec, init, n_restarts=args.restarts,
                              options=opts, weights=weights, jobs=args.jobs)
    elif args.framework == "atc":
        report = atc_solve(spec, init, options=opts, weights=weights)
    else:
        report = soi_solve(spec, init, options=opts, weights=weights)

    print(f"scene        : {spec.name}")
    print(f"framework    : {args.framework} ({args.init} init, seed {args.seed})")
    print(f"objective    : {report.f_opt:.6f}")
    for term, value in report.breakdown.items():
        print(f"  {term:<12s} {value:.6f}")
    print(f"violation    : {report.full_violation:.3e}")
    for key in ("exact_volume", "routing_linear", "gap_volume", "gap_routing"):
        if key in report.metrics:
            print(f"{key:<13s}: {report.metrics[key]:.6f}")
    print(f"converged    : {report.converged} ({report.termination})")
    print(f"wall time    : {report.wall_time:.2f}s")

    if args.out:
        sceneio.save_result(args.out, report, spec, include_timing=args.timing,
                            framework=args.framework, init_kind=args.init,
                            seed=args.seed)
        print(f"result saved : {args.out}")
    return 0 if report.converged and report.full_violation <= args.tol_feas else 1


def cmd_solve(args) -> int:
    spec = sceneio.load_scene(args.scene)
    return _run(spec, args)


def cmd_bench(args) -> int:
    spec = benchmarks.generate_benchmark(args.suite, n_spheres=args.spheres)
    code = 1
    opts = SolverOptions(tol_feas=args.tol_feas, tol_grad=args.tol_grad,
                         inner_maxiter=args.inner_maxiter,
                         outer_maxiter=args.outer_maxiter)
    weights = preset_weights(args.preset) if args.preset else None
    if args.init == "manual" and args.x0 is None and spec.certificate is not None:
        init = InitMethod(kind="manual", seed=args.seed, x0=spec.certificate)
    else:
        init = _make_init(args, spec)
    if args.framework == "nested":
        report = nested_solve(spec, init, n_restarts=args.restarts,
                              options=opts, weights=weights, jobs=args.jobs)
    elif args.framework == "atc":
        report = atc_solve(spec, init, options=opts, weights=weights)
    else:
        report = soi_solve(spec, init, options=opts, weights=weights)
    result = benchmarks.BenchmarkResult.from_report(spec, report, args.framework,
                                                    init, args.spheres)
    print(f"benchmark    : {spec.name} ({args.spheres} spheres/body)")
    print(f"best f       : {result.best_f:.6f}  violation {result.best_violation:.3e}")
    print(f"exact volume : {result.best_exact_volume:.6f}")
    print(f"routing      : {result.best_routing_linear:.6f}")
    if spec.known_optimum:
        print(f"optimum      : volume {spec.known_optimum[0]}, "
              f"routing {spec.known_optimum[1]}")
        print(f"gaps         : volume {result.gap_volume:+.6f}, "
              f"routing {result.gap_routing:+.6f}"
              + ("  [suspicious]" if result.suspicious_gap else ""))
    code = 0 if result.best_converged and result.best_violation <= args.tol_feas else 1
    if args.out:
        sceneio.save_result(args.out, result, spec, include_timing=args.timing)
        print(f"result saved : {args.out}")
    return code


def cmd_validate(args) -> int:
    doc = sceneio.load_result(args.result)
    if args.scene:
        spec = sceneio.load_scene(args.scene)
    else:
        name = doc.get("scene", "")
        spec = benchmarks.generate_benchmark(name, n_spheres=doc.get("n_spheres", 20))
    checks = sceneio.validate_result(doc, spec)
    for key, value in checks.items():
        print(f"{key:<24s}: {value}")
    return 0 if checks["ok"] else 1


def cmd_decompose(args) -> int:
    dims = tuple(args.dims) if args.dims else (1.0, 1.0, 2.0)
    body = benchmarks.decompose_primitive(args.shape, args.n, dims=dims)
    ratio = benchmarks.shape_fill_ratio(body, args.shape, dims=dims)
    print(f"shape        : {args.shape} {dims}")
    print(f"spheres      : {body.n_spheres} (requested {args.n})")
    print(f"fill ratio   : {ratio:.4f}")
    print(f"min clearance: {body.min_pairwise_clearance():.3e}")
    if args.out:
        doc = {"id": body.id,
               "spheres": np.column_stack([body.centers, body.radii]).tolist(),
               "mass": body.mass, "cog": body.cog_local.tolist(),
               "inertia": body.inertia_local.tolist()}
        with open(args.out, "w") as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")
        print(f"body saved   : {args.out}")
    return 0


def cmd_enumerate(args) -> int:
    spec = benchmarks.generate_benchmark(args.suite, n_spheres=4)
    res = benchmarks.enumerate_discrete_optima(spec)
    print(f"benchmark    : {spec.name}")
    print(f"count        : {res.count} (nodes explored {res.nodes_explored})")
    if res.published_count is not None:
        marker = "matches" if res.matches_published else "differs from"
        print(f"published    : {res.published_count} ({marker} our convention)")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="spatialpack",
        description="Placement and routing of sphere-decomposed rigid bodies.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve a scene file")
    p.add_argument("scene")
    _add_run_args(p)
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("bench", help="run a named benchmark suite entry")
    p.add_argument("suite", help="cuboid2|cuboid4|cuboid6|lshape2|lshape4|"
                                 "lshape6|unique|priorwork{3,4,6}_{14,25,50,100}|aircraft")
    p.add_argument("--spheres", type=int, default=20)
    _add_run_args(p)
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("validate", help="replay and check a result file")
    p.add_argument("result")
    p.add_argument("--scene", default=None,
                   help="scene file (benchmark results regenerate their scene)")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("decompose", help="sphere-decompose a primitive shape")
    p.add_argument("shape", choices=("cuboid", "cube", "lshape", "double_lshape"))
    p.add_argument("n", type=int)
    p.add_argument("--dims", type=float, nargs="*", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_decompose)

    p = sub.add_parser("enumerate", help="count grid-aligned analytical optima")
    p.add_argument("suite")
    p.set_defaults(fn=cmd_enumerate)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
