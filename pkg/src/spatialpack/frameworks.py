"""Meta-strategies wrapped around the constrained solver.

Three frameworks share four initializers (random, equally spaced, genetic,
manual):

* ``nested_solve`` runs independent restarts of the full placement-and-
  routing NLP and keeps the best feasible local solution.
* ``atc_solve`` decomposes a placement-only problem into a system-level
  volume minimization plus one subproblem per body, coordinated by targets,
  multipliers and growing coupling/penalty weights until the two variable
  copies agree.
* ``soi_solve`` starts from one enclosing-sphere constraint per body pair
  and expands to detailed sphere-pair constraints only for pairs whose
  enclosing spheres touch or whose detailed clearances are violated.

Every framework re-validates its answer against the complete Absolute
constraint set before reporting feasibility.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .constraints import ConstraintSet, full_violation
from .geometry import enclosing_sphere
from .objectives import ObjectiveWeights, exact_aabb_volume, routing_length_linear, total_objective
from .problem import ProblemSpec, build_nlp
from .solver import NlpProblem, SolveReport, SolverOptions, minimize


@dataclass
class GaParams:
    population: int = 30
    generations: int = 40
    crossover_rate: float = 0.9
    mutation_sigma: float = 0.1      # fraction of the per-coordinate range
    tournament: int = 3

    def __post_init__(self):
        if self.population < 4:
            raise ValueError("GA population must be at least 4")


@dataclass
class InitMethod:
    """Initialization strategy for restart-based frameworks."""

    kind: str = "random"             # "random" | "es" | "ga" | "manual"
    seed: int = 0
    x0: Optional[np.ndarray] = None  # manual start
    ga: GaParams = field(default_factory=GaParams)
    fitness_mode: str = "cheap"      # "cheap" | "refined"
    jitter: float = 0.05             # equally-spaced jitter fraction

    def __post_init__(self):
        if self.kind not in ("random", "es", "ga", "manual"):
            raise ValueError(f"unknown init method {self.kind!r}")
        if self.kind == "manual" and self.x0 is None:
            raise ValueError("manual init needs x0")
        if self.fitness_mode not in ("cheap", "refined"):
            raise ValueError(f"unknown fitness mode {self.fitness_mode!r}")


def init_random(spec: ProblemSpec, rng: np.random.Generator) -> np.ndarray:
    """Uniform sample of every design coordinate within the init box."""
    lo, hi = spec.init_bounds()
    return lo + rng.random(spec.dim) * (hi - lo)


_CORNER_SIGNS = [
    (-1, -1, -1), (1, 1, 1), (1, -1, -1), (-1, 1, 1),
    (-1, 1, -1), (1, -1, 1), (-1, -1, 1), (1, 1, -1),
]


def init_equally_spaced(spec: ProblemSpec, rng: np.random.Generator,
                        jitter: float = 0.05) -> np.ndarray:
    """Bodies placed round-robin on box corners then face midpoints.

    Corners are ordered in opposite pairs so two bodies start far apart.
    Positions get a uniform jitter of +-``jitter`` times the box extent and
    are clamped into the box; orientations are uniform; control points start
    on the straight line between their route's ports.
    """
    b = spec.bounds
    mid = 0.5 * (b.translation_low + b.translation_high)
    half = 0.5 * (b.translation_high - b.translation_low)
    sites = [mid + np.asarray(s) * half for s in _CORNER_SIGNS]
    for axis in range(3):
        for sign in (-1, 1):
            p = mid.copy()
            p[axis] = mid[axis] + sign * half[axis]
            sites.append(p)

    layout = spec.layout()
    x = np.zeros(spec.dim)
    extent = b.translation_high - b.translation_low
    for i in range(len(spec.bodies)):
        s = layout.body_slice(i)
        x[s.start:s.start + 3] = rng.uniform(b.angle_low, b.angle_high, 3)
        pos = sites[i % len(sites)] + jitter * extent * (2.0 * rng.random(3) - 1.0)
        x[s.start + 3:s.start + 6] = np.clip(pos, b.translation_low, b.translation_high)

    world = spec.world(x)
    for r_idx, route in enumerate(spec.routes):
        pa = world.ports[route.a[0]][route.a[1]]
        pb = world.ports[route.b[0]][route.b[1]]
        s = layout.cp_slice(r_idx)
        k = route.n_control_points
        for m in range(k):
            frac = (m + 1) / (k + 1)
            p = pa + frac * (pb - pa) + jitter * extent * (2.0 * rng.random(3) - 1.0)
            x[s.start + 3 * m:s.start + 3 * m + 3] = np.clip(
                p, b.translation_low, b.translation_high)
    return x


def real_coded_ga(fitness, lo: np.ndarray, hi: np.ndarray, rng: np.random.Generator,
                  params: GaParams):
    """Minimize ``fitness`` with tournament selection, blend crossover,
    annealed Gaussian mutation and single elitism.

    Returns (best_x, best_f, best_history, final_population).
    """
    dim = lo.size
    pop = lo + rng.random((params.population, dim)) * (hi - lo)
    fit = np.array([fitness(ind) for ind in pop])
    history = []
    span = hi - lo
    for gen in range(params.generations):
        order = np.argsort(fit, kind="stable")
        pop, fit = pop[order], fit[order]
        history.append(float(fit[0]))
        new_pop = [pop[0].copy()]                    # elitism
        sigma = params.mutation_sigma * (1.0 - 0.9 * gen / params.generations)
        while len(new_pop) < params.population:
            idx = rng.integers(0, params.population, params.tournament)
            p1 = pop[idx[np.argmin(fit[idx])]]
            idx = rng.integers(0, params.population, params.tournament)
            p2 = pop[idx[np.argmin(fit[idx])]]
            if rng.random() < params.crossover_rate:
                lo_g = np.minimum(p1, p2)
                hi_g = np.maximum(p1, p2)
                d = hi_g - lo_g
                child = lo_g - 0.5 * d + rng.random(dim) * 2.0 * d
            else:
                child = p1.copy()
            mutate = rng.random(dim) < max(1.0 / dim, 0.1)
            child = child + mutate * rng.normal(0.0, sigma, dim) * span
            new_pop.append(np.clip(child, lo, hi))
        pop = np.stack(new_pop)
        fit = np.array([fitness(ind) for ind in pop])
    order = np.argsort(fit, kind="stable")
    pop, fit = pop[order], fit[order]
    history.append(float(fit[0]))
    return pop[0].copy(), float(fit[0]), history, pop


def init_genetic(spec: ProblemSpec, rng: np.random.Generator,
                 params: Optional[GaParams] = None, fitness_mode: str = "cheap",
                 weights: Optional[ObjectiveWeights] = None,
                 options: Optional[SolverOptions] = None) -> np.ndarray:
    """Best individual of a GA over the design vector.

    Cheap fitness adds a quadratic violation penalty to the objective;
    refined fitness scores each individual by the objective after a full
    NLP solve (population * generations solver calls).
    """
    params = params or GaParams()
    nlp = build_nlp(spec, weights=weights)

    if fitness_mode == "cheap":
        def fitness(x):
            f, _ = nlp.objective(x)
            if nlp.constraint_values is None:
                return f
            g = nlp.constraint_values(x)
            return f + 1e3 * float(np.sum(np.maximum(0.0, g) ** 2))
    else:
        opts = options or SolverOptions()

        def fitness(x):
            rep = minimize(nlp, x, opts)
            penalty = 0.0 if rep.max_violation <= opts.tol_feas else 1e3 * rep.max_violation
            return rep.f_opt + penalty

    lo, hi = spec.init_bounds()
    best, _, _, _ = real_coded_ga(fitness, lo, hi, rng, params)
    return best


def make_initial_point(spec: ProblemSpec, init: InitMethod, restart: int,
                       weights: Optional[ObjectiveWeights] = None) -> np.ndarray:
    rng = np.random.default_rng([init.seed, restart])
    if init.kind == "manual":
        return np.asarray(init.x0, dtype=float).copy()
    if init.kind == "random":
        return init_random(spec, rng)
    if init.kind == "es":
        return init_equally_spaced(spec, rng, jitter=init.jitter)
    return init_genetic(spec, rng, init.ga, init.fitness_mode, weights=weights)


@dataclass
class RestartRecord:
    index: int
    f: float
    violation: float
    converged: bool
    wall_time: float
    x0: np.ndarray
    x_opt: np.ndarray


def _solution_metrics(spec: ProblemSpec, x: np.ndarray) -> dict:
    world = spec.world(x)
    metrics = {
        "exact_volume": exact_aabb_volume(world),
        "routing_linear": routing_length_linear(world),
    }
    if spec.known_optimum is not None:
        vol_opt, rout_opt = spec.known_optimum
        metrics["gap_volume"] = metrics["exact_volume"] - vol_opt
        metrics["gap_routing"] = metrics["routing_linear"] - rout_opt
    return metrics


def _run_restart(args):
    spec, init, options, weights, restart = args
    x0 = make_initial_point(spec, init, restart, weights)
    nlp = build_nlp(spec, weights=weights)
    report = minimize(nlp, x0, options)
    return restart, x0, report


def _better(a: tuple, b: tuple) -> bool:
    """Lexicographic restart ordering: feasibility, objective, index."""
    return a < b


def nested_solve(spec: ProblemSpec, init: InitMethod, n_restarts: int = 1,
                 options: Optional[SolverOptions] = None,
                 weights: Optional[ObjectiveWeights] = None,
                 jobs: int = 1) -> SolveReport:
    """Multi-start solve: initialize, refine, keep the best feasible result.

    The returned report carries the full per-restart log; if no restart is
    feasible the least-violating solution is returned with converged=False.
    """
    if n_restarts < 1:
        raise ValueError("n_restarts must be >= 1")
    opts = options or SolverOptions()
    t0 = time.perf_counter()

    tasks = [(spec, init, opts, weights, r) for r in range(n_restarts)]
    results = []
    if jobs > 1 and n_restarts > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for out in pool.map(_run_restart, tasks):
                results.append(out)
        results.sort(key=lambda t: t[0])
    else:
        results = [_run_restart(t) for t in tasks]

    records = []
    best_key = None
    best = None
    for restart, x0, report in results:
        feasible = report.max_violation <= opts.tol_feas
        records.append(RestartRecord(
            index=restart, f=report.f_opt, violation=report.max_violation,
            converged=report.converged, wall_time=report.wall_time,
            x0=x0, x_opt=report.x_opt,
        ))
        key = (0 if feasible else 1,
               report.f_opt if feasible else report.max_violation,
               restart)
        if best_key is None or _better(key, best_key):
            best_key = key
            best = report

    final = replace(best)
    final.restarts = records
    final.wall_time = time.perf_counter() - t0
    final.full_violation = full_violation(spec, final.x_opt)
    final.converged = bool(best.converged and final.full_violation <= opts.tol_feas)
    final.metrics = _solution_metrics(spec, final.x_opt)
    return final


# -- Analytical target cascading ---------------------------------------


@dataclass
class AtcOptions:
    pi0: float = 1.0
    pi_growth: float = 1.5
    pi_cap: float = 1e4
    rho0: float = 1.0
    rho_growth: float = 2.0
    rho_cap: float = 1e5
    tol: float = 1e-4
    max_outer: int = 30
    subsystem_regularization: float = 1e-4


def atc_solve(spec: ProblemSpec, init: InitMethod,
              options: Optional[SolverOptions] = None,
              atc: Optional[AtcOptions] = None,
              weights: Optional[ObjectiveWeights] = None) -> SolveReport:
    """Target-cascading placement solve (system volume + per-body subproblems).

    Placement only: specs with routes are rejected.  Each outer iteration
    solves one subproblem per body (that body moves, the rest stay at the
    system values), then the system repair step restores joint feasibility
    with a quadratic coupling toward the subsystem responses.
    """
    if spec.routes:
        raise ValueError("target cascading supports placement-only specs")
    opts = options or SolverOptions()
    atc = atc or AtcOptions()
    t0 = time.perf_counter()

    x0 = make_initial_point(spec, init, 0, weights)
    n = len(spec.bodies)
    dim = spec.dim
    x_u = x0.copy()
    x_l = x0.copy()
    gamma = x_u.copy()
    lam = np.zeros(dim)
    pi = atc.pi0
    rho = atc.rho0
    layout = spec.layout()
    lo, hi = spec.solver_bounds()
    base = build_nlp(spec, weights=weights)
    history = []
    inner_total = 0

    sub_sets = [
        ConstraintSet(spec, pair_subset=[(min(i, j), max(i, j)) for j in range(n) if j != i])
        for i in range(n)
    ]

    converged = False
    gap = np.inf
    for outer in range(atc.max_outer):
        # Subsystem solves: body i moves, everything else fixed at x_u.
        for i in range(n):
            s = layout.body_slice(i)
            cs = sub_sets[i]
            g_i = gamma[s]
            lam_i = lam[s]

            def sub_objective(xi, s=s, g_i=g_i, lam_i=lam_i):
                grad = atc.subsystem_regularization * 2.0 * xi + lam_i + rho * (xi - g_i)
                val = (atc.subsystem_regularization * float(xi @ xi)
                       + float(lam_i @ (xi - g_i))
                       + 0.5 * rho * float((xi - g_i) @ (xi - g_i)))
                return val, grad

            def sub_cons(xi, s=s):
                xf = x_u.copy()
                xf[s] = xi
                return cs.values(spec.world(xf))

            def sub_vjp(xi, w, s=s):
                xf = x_u.copy()
                xf[s] = xi
                return cs.vjp(spec.world(xf), w)[s]

            sub = NlpProblem(
                n=6, objective=sub_objective,
                constraint_values=sub_cons if cs.n_rows_absolute else None,
                constraint_vjp=sub_vjp if cs.n_rows_absolute else None,
                lower=lo[s], upper=hi[s], name=f"{spec.name}-sub{i}",
            )
            rep = minimize(sub, x_l[s], opts)
            x_l[s] = rep.x_opt
            inner_total += rep.inner_iterations

        # System repair step with coupling toward the subsystem responses.
        def sys_objective(x):
            f, g = base.objective(x)
            d = x - x_l
            return f + 0.5 * pi * float(d @ d), g + pi * d

        system = NlpProblem(
            n=dim, objective=sys_objective,
            constraint_values=base.constraint_values,
            constraint_vjp=base.constraint_vjp,
            lower=lo, upper=hi, name=f"{spec.name}-system",
        )
        rep = minimize(system, x_u, opts)
        x_u = rep.x_opt
        inner_total += rep.inner_iterations

        gap = float(np.max(np.abs(x_u - x_l)))
        history.append({"outer": outer, "gap": gap, "pi": pi, "rho": rho})
        if gap <= atc.tol:
            converged = True
            break

        lam = lam + rho * (x_l - gamma)
        gamma = x_u.copy()
        pi = min(pi * atc.pi_growth, atc.pi_cap)
        rho = min(rho * atc.rho_growth, atc.rho_cap)

    f_opt, _, breakdown = total_objective(x_u, spec, weights)
    viol = full_violation(spec, x_u)
    return SolveReport(
        x_opt=x_u, f_opt=float(f_opt), breakdown=breakdown,
        max_violation=viol, outer_iterations=len(history),
        inner_iterations=inner_total,
        wall_time=time.perf_counter() - t0,
        converged=bool(converged and viol <= opts.tol_feas),
        termination="consistency gap closed" if converged else "outer iteration limit",
        full_violation=viol,
        metrics={"atc_history": history, "consistency_gap": gap,
                 **_solution_metrics(spec, x_u)},
    )


# -- Sphere of influence ------------------------------------------------


def body_enclosing_spheres(spec: ProblemSpec):
    """Local-frame enclosing sphere (center, radius) per body."""
    return [enclosing_sphere(b.centers, b.radii) for b in spec.bodies]


def soi_solve(spec: ProblemSpec, init: InitMethod,
              options: Optional[SolverOptions] = None,
              weights: Optional[ObjectiveWeights] = None,
              touch_margin: float = 1e-5) -> SolveReport:
    """Active-set placement solve with enclosing-sphere screening.

    Body pairs start disengaged (one conservative enclosing-sphere row
    each).  After each solve, a pair engages when its detailed clearances
    are violated or its enclosing spheres touch or intersect; engaged pairs
    are constrained by all their sphere-pair rows.  The loop stops when no
    pair changes state, and the final point is validated against the full
    detailed constraint set.
    """
    if spec.routes:
        raise ValueError("sphere-of-influence supports placement-only specs")
    opts = options or SolverOptions()
    t0 = time.perf_counter()
    n = len(spec.bodies)
    all_pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    enc = body_enclosing_spheres(spec)

    x = make_initial_point(spec, init, 0, weights)
    active: set = set()
    history = []
    inner_total = 0
    last = None
    for round_idx in range(len(all_pairs) + 1):
        nlp = build_nlp(spec, active_pairs=active)
        last = minimize(nlp, x, opts)
        x = last.x_opt
        inner_total += last.inner_iterations

        world = spec.world(x)
        new_active = set(active)
        for (i, j) in all_pairs:
            if (i, j) in new_active:
                continue
            diff = world.centers[i][:, None, :] - world.centers[j][None, :, :]
            dist = np.linalg.norm(diff, axis=2)
            detail_min = float(
                (dist - (spec.bodies[i].radii[:, None] + spec.bodies[j].radii[None, :])).min()
            )
            ci = world.rot[i] @ enc[i][0] + world.poses[i, 3:6]
            cj = world.rot[j] @ enc[j][0] + world.poses[j, 3:6]
            enc_clearance = float(np.linalg.norm(ci - cj) - (enc[i][1] + enc[j][1]))
            if detail_min < -opts.tol_feas or enc_clearance <= touch_margin:
                new_active.add((i, j))
        history.append({"round": round_idx, "active": sorted(active),
                        "n_active": len(active)})
        if new_active == active:
            break
        active = new_active

    viol = full_violation(spec, x)
    f_opt, _, breakdown = total_objective(x, spec, weights)
    return SolveReport(
        x_opt=x, f_opt=float(f_opt), breakdown=breakdown,
        max_violation=viol, outer_iterations=len(history),
        inner_iterations=inner_total,
        wall_time=time.perf_counter() - t0,
        converged=bool(last.converged and viol <= opts.tol_feas),
        termination="active set stable",
        full_violation=viol,
        metrics={"soi_history": history, "active_pairs": sorted(active),
                 **_solution_metrics(spec, x)},
    )
