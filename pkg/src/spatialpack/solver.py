"""Smooth inequality-constrained minimization.

Augmented Lagrangian (Powell-Hestenes-Rockafellar form for g(x) <= 0) with
multiplier updates lam <- max(0, lam + rho * g) and safeguarded penalty
growth, using bounded L-BFGS-B as the inner minimizer.  Gradients are
analytic throughout; the central-difference helpers here exist only to
verify them.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize as scipy_minimize


@dataclass
class NlpProblem:
    """Differentiable objective, inequality constraints and variable bounds.

    ``objective(x)`` returns (value, gradient).  ``constraint_values(x)``
    returns the vector g with the feasible set {g <= 0}; ``constraint_vjp``
    returns sum_k w_k * grad g_k(x).  Either both constraint callables are
    given or neither.
    """

    n: int
    objective: Callable[[np.ndarray], tuple[float, np.ndarray]]
    constraint_values: Optional[Callable[[np.ndarray], np.ndarray]] = None
    constraint_vjp: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None
    breakdown: Optional[Callable[[np.ndarray], dict]] = None
    name: str = ""

    def bounds_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.full(self.n, -np.inf) if self.lower is None else np.asarray(self.lower, float)
        hi = np.full(self.n, np.inf) if self.upper is None else np.asarray(self.upper, float)
        return lo, hi


@dataclass
class SolverOptions:
    rho0: float = 10.0
    rho_growth: float = 5.0
    rho_cap: float = 1e6
    tol_feas: float = 1e-6
    tol_grad: float = 1e-6
    inner_maxiter: int = 500
    outer_maxiter: int = 30
    time_limit: Optional[float] = None


@dataclass
class SolveReport:
    """Outcome of one constrained solve (or of a multi-start framework)."""

    x_opt: np.ndarray
    f_opt: float
    breakdown: dict = field(default_factory=dict)
    max_violation: float = 0.0
    outer_iterations: int = 0
    inner_iterations: int = 0
    n_evaluations: int = 0
    wall_time: float = 0.0
    converged: bool = False
    termination: str = ""
    violation_history: list = field(default_factory=list)
    multiplier_max: float = 0.0
    restarts: list = field(default_factory=list)
    full_violation: Optional[float] = None
    metrics: dict = field(default_factory=dict)


def minimize(problem: NlpProblem, x0: np.ndarray,
             options: Optional[SolverOptions] = None) -> SolveReport:
    """Minimize an NlpProblem from ``x0`` (clamped into the bound box).

    Terminates when the worst constraint violation is at most ``tol_feas``
    and the projected gradient of the Lagrangian (with the current
    multiplier estimate) is at most ``tol_grad``, or when the iteration or
    time budget runs out.
    """
    opts = options or SolverOptions()
    lo, hi = problem.bounds_arrays()
    x = np.clip(np.asarray(x0, dtype=float), lo, hi)
    t0 = time.perf_counter()

    f0, g0 = problem.objective(x)
    nfev = 1
    if not np.isfinite(f0) or not np.all(np.isfinite(g0)):
        return SolveReport(
            x_opt=x, f_opt=float(f0), converged=False,
            termination="non-finite objective at start",
            wall_time=time.perf_counter() - t0,
        )

    has_cons = problem.constraint_values is not None
    if has_cons:
        g = problem.constraint_values(x)
        lam = np.zeros(len(g))
    else:
        g = np.empty(0)
        lam = np.empty(0)

    def al_value_grad(xk):
        nonlocal nfev
        nfev += 1
        f, gf = problem.objective(xk)
        if not has_cons:
            return f, gf
        gk = problem.constraint_values(xk)
        y = lam + rho * gk
        yp = np.maximum(0.0, y)
        val = f + 0.5 / rho * (float(yp @ yp) - float(lam @ lam))
        grad = gf + problem.constraint_vjp(xk, yp)
        return val, grad

    rho = opts.rho0
    viol_history = []
    inner_total = 0
    prev_viol = np.inf
    converged = False
    termination = "outer iteration limit"
    bounds = list(zip(lo, hi))

    for outer in range(opts.outer_maxiter):
        res = scipy_minimize(
            al_value_grad, x, jac=True, method="L-BFGS-B", bounds=bounds,
            options={"maxiter": opts.inner_maxiter, "ftol": 1e-14,
                     "gtol": 0.2 * opts.tol_grad, "maxls": 50},
        )
        x = np.asarray(res.x, dtype=float)
        inner_total += int(res.nit)

        if has_cons:
            g = problem.constraint_values(x)
            viol = float(max(0.0, g.max())) if g.size else 0.0
        else:
            viol = 0.0
        viol_history.append(viol)

        # KKT-style check with the updated multiplier estimate.
        f, gf = problem.objective(x)
        nfev += 1
        if has_cons:
            mult = np.maximum(0.0, lam + rho * g)
            grad_l = gf + problem.constraint_vjp(x, mult)
        else:
            grad_l = gf
        pg = x - np.clip(x - grad_l, lo, hi)
        pg_norm = float(np.max(np.abs(pg))) if pg.size else 0.0

        if viol <= opts.tol_feas and pg_norm <= opts.tol_grad:
            converged = True
            termination = "feasible KKT point"
            lam = mult if has_cons else lam
            break

        if has_cons:
            lam = np.maximum(0.0, lam + rho * g)
            if viol > 0.25 * prev_viol and viol > opts.tol_feas:
                rho = min(rho * opts.rho_growth, opts.rho_cap)
            prev_viol = viol
        elif pg_norm <= opts.tol_grad:
            converged = True
            termination = "unconstrained stationary point"
            break

        if opts.time_limit is not None and time.perf_counter() - t0 > opts.time_limit:
            termination = "time limit"
            break

    f_opt, _ = problem.objective(x)
    breakdown = problem.breakdown(x) if problem.breakdown is not None else {}
    if has_cons:
        g = problem.constraint_values(x)
        max_violation = float(max(0.0, g.max())) if g.size else 0.0
    else:
        max_violation = 0.0

    return SolveReport(
        x_opt=x,
        f_opt=float(f_opt),
        breakdown=breakdown,
        max_violation=max_violation,
        outer_iterations=len(viol_history),
        inner_iterations=inner_total,
        n_evaluations=nfev,
        wall_time=time.perf_counter() - t0,
        converged=converged,
        termination=termination,
        violation_history=viol_history,
        multiplier_max=float(lam.max()) if lam.size else 0.0,
    )


def gradient(f: Callable[[np.ndarray], float], x: np.ndarray,
             h: float = 1e-6) -> np.ndarray:
    """Central finite-difference gradient (verification oracle only)."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        out[i] = (f(xp) - f(xm)) / (2.0 * h)
    return out


def check_gradient(f: Callable[[np.ndarray], float],
                   grad_f: Callable[[np.ndarray], np.ndarray],
                   x: np.ndarray, h: float = 1e-6) -> float:
    """Worst relative mismatch between analytic and central-difference
    gradients, with denominator max(1, |analytic_i|) per coordinate."""
    analytic = np.asarray(grad_f(x), dtype=float)
    numeric = gradient(f, x, h)
    denom = np.maximum(1.0, np.abs(analytic))
    return float(np.max(np.abs(analytic - numeric) / denom))
