"""Problem specification and assembly into a solvable NLP.

A ProblemSpec bundles bodies, routes, an optional design boundary, objective
weights, variable bounds and the constraint mode.  ``build_nlp`` turns it
into the generic solver interface, sharing one world-geometry evaluation per
design vector between the objective and the constraints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .boundary import BoundaryModel
from .constraints import ConstraintMode, ConstraintSet
from .geometry import Body, Layout, Route, WorldGeometry
from .objectives import ObjectiveWeights, total_objective
from .solver import NlpProblem


@dataclass
class DomainBounds:
    """Design-space box for translations and control points.

    Angle variables are sampled in [-pi, pi] by the initializers; the solver
    box is padded by ``angle_margin`` on both sides so that configurations
    requiring half-turn rotations are not wedged against a bound.
    """

    translation_low: np.ndarray = field(default_factory=lambda: np.full(3, -4.0))
    translation_high: np.ndarray = field(default_factory=lambda: np.full(3, 4.0))
    angle_low: float = -math.pi
    angle_high: float = math.pi
    angle_margin: float = math.pi / 4

    def __post_init__(self):
        self.translation_low = np.asarray(self.translation_low, float)
        self.translation_high = np.asarray(self.translation_high, float)
        if np.any(self.translation_low >= self.translation_high):
            raise ValueError("translation bounds must be a non-empty box")


@dataclass
class ProblemSpec:
    """Everything needed to evaluate and solve one packing problem."""

    name: str
    bodies: list[Body]
    routes: list[Route] = field(default_factory=list)
    boundary: Optional[BoundaryModel] = None
    weights: ObjectiveWeights = field(default_factory=ObjectiveWeights)
    bounds: DomainBounds = field(default_factory=DomainBounds)
    constraint_mode: ConstraintMode = field(default_factory=ConstraintMode)
    cog_target: np.ndarray = field(default_factory=lambda: np.zeros(3))
    known_optimum: Optional[tuple] = None   # (aabb volume, linear routing)
    certificate: Optional[np.ndarray] = None

    def __post_init__(self):
        self.cog_target = np.asarray(self.cog_target, float)
        for route in self.routes:
            for body_idx, port_idx in (route.a, route.b):
                if body_idx >= len(self.bodies):
                    raise ValueError(f"route {route.id!r} references body {body_idx}")
                if port_idx >= self.bodies[body_idx].ports.shape[0]:
                    raise ValueError(
                        f"route {route.id!r} references port {port_idx} of "
                        f"body {self.bodies[body_idx].id!r}"
                    )

    @property
    def n_bodies(self) -> int:
        return len(self.bodies)

    def layout(self) -> Layout:
        return Layout(len(self.bodies), [r.n_control_points for r in self.routes])

    @property
    def dim(self) -> int:
        return self.layout().dim

    def world(self, x: np.ndarray) -> WorldGeometry:
        return WorldGeometry(self.bodies, self.routes, self.layout(), x)

    def solver_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-coordinate bound box handed to the NLP solver."""
        layout = self.layout()
        lo = np.empty(layout.dim)
        hi = np.empty(layout.dim)
        b = self.bounds
        for i in range(len(self.bodies)):
            s = layout.body_slice(i)
            lo[s.start:s.start + 3] = b.angle_low - b.angle_margin
            hi[s.start:s.start + 3] = b.angle_high + b.angle_margin
            lo[s.start + 3:s.start + 6] = b.translation_low
            hi[s.start + 3:s.start + 6] = b.translation_high
        for r in range(len(self.routes)):
            s = layout.cp_slice(r)
            k = layout.cp_counts[r]
            lo[s] = np.tile(b.translation_low, k)
            hi[s] = np.tile(b.translation_high, k)
        return lo, hi

    def init_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Sampling box for initializers: angles stay in [-pi, pi]."""
        lo, hi = self.solver_bounds()
        layout = self.layout()
        for i in range(len(self.bodies)):
            s = layout.body_slice(i)
            lo[s.start:s.start + 3] = self.bounds.angle_low
            hi[s.start:s.start + 3] = self.bounds.angle_high
        return lo, hi


class _WorldCache:
    """Re-use the world geometry when objective and constraints share x."""

    def __init__(self, spec: ProblemSpec):
        self.spec = spec
        self._key = None
        self._world = None

    def get(self, x: np.ndarray) -> WorldGeometry:
        key = x.tobytes()
        if key != self._key:
            self._world = self.spec.world(x)
            self._key = key
        return self._world


def build_nlp(spec: ProblemSpec, active_pairs: Optional[set] = None,
              mode: Optional[ConstraintMode] = None,
              weights: Optional[ObjectiveWeights] = None,
              constraint_set: Optional[ConstraintSet] = None) -> NlpProblem:
    """Assemble the spec into the generic solver problem."""
    cs = constraint_set if constraint_set is not None else ConstraintSet(
        spec, active_pairs=active_pairs, mode=mode)
    cache = _WorldCache(spec)
    w = weights if weights is not None else spec.weights

    def objective(x):
        world = cache.get(x)
        value, grad, _ = total_objective(x, spec, w, world=world)
        return value, grad

    def cons_values(x):
        return cs.values(cache.get(x))

    def cons_vjp(x, wvec):
        return cs.vjp(cache.get(x), wvec)

    def breakdown(x):
        return total_objective(x, spec, w, world=cache.get(x))[2]

    lo, hi = spec.solver_bounds()
    has_rows = cs.n_rows_absolute > 0
    return NlpProblem(
        n=spec.dim,
        objective=objective,
        constraint_values=cons_values if has_rows else None,
        constraint_vjp=cons_vjp if has_rows else None,
        lower=lo,
        upper=hi,
        breakdown=breakdown,
        name=spec.name,
    )
