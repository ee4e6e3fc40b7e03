"""Scalar objectives and their weighted aggregate.

Routing length comes in a quadratic form (sum of squared segment lengths,
the optimized default) and an exponential form that penalizes long segments
superlinearly; the linear sum is reported but never optimized.  Bounding box
volume uses the Boltzmann operator as a smooth stand-in for min/max of the
sphere extents.  ``total_objective`` combines routing, boundary, center of
gravity, inertia, volume and mean-distance terms with non-negative weights
and returns the per-term breakdown alongside the scalar.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from . import boundary as boundary_mod
from . import physics
from .geometry import WorldGeometry

if TYPE_CHECKING:  # pragma: no cover
    from .problem import ProblemSpec

_EXP_CAP = 60.0


@dataclass
class ObjectiveWeights:
    """Non-negative weights of the aggregate objective."""

    routing: float = 0.0
    boundary: float = 0.0
    cog: float = 0.0
    inertia: float = 0.0
    volume: float = 0.0
    mean_distance: float = 0.0
    routing_variant: str = "quadratic"     # "quadratic" | "exponential"
    gamma: float = 1.0                     # exponential routing sharpness
    alpha_volume: float = 50.0             # Boltzmann sharpness for volume
    inertia_axis_weights: tuple = (1.0, 1.0, 1.0)

    def __post_init__(self):
        for name in ("routing", "boundary", "cog", "inertia", "volume", "mean_distance"):
            if getattr(self, name) < 0:
                raise ValueError(f"weight {name} must be >= 0")
        if self.routing_variant not in ("quadratic", "exponential"):
            raise ValueError(f"unknown routing variant {self.routing_variant!r}")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.alpha_volume <= 0:
            raise ValueError("alpha_volume must be positive")


# Named presets mapping the benchmark objective labels onto weights: f1/f3
# pair compactness with quadratic routing, f2/f4 with exponential routing.
PRESETS = {
    "f1": {"volume": 1.0, "routing": 1.0, "routing_variant": "quadratic"},
    "f2": {"volume": 1.0, "routing": 1.0, "routing_variant": "exponential"},
    "f3": {"volume": 1.0, "routing": 1.0, "routing_variant": "quadratic"},
    "f4": {"volume": 1.0, "routing": 1.0, "routing_variant": "exponential"},
}


def preset_weights(name: str, **overrides) -> ObjectiveWeights:
    if name not in PRESETS:
        raise ValueError(f"unknown objective preset {name!r}")
    kw = dict(PRESETS[name])
    kw.update(overrides)
    return ObjectiveWeights(**kw)


def _segment_data(world: WorldGeometry):
    for r_idx, nodes in enumerate(world.route_nodes):
        for s in range(len(nodes) - 1):
            yield r_idx, s, nodes[s], nodes[s + 1]


def routing_length_sq(world: WorldGeometry):
    """Sum of squared segment lengths and its gradient."""
    value = 0.0
    grad = np.zeros(world.layout.dim)
    for r_idx, s, a, b in _segment_data(world):
        d = b - a
        value += float(d @ d)
        world.add_node_gradient(grad, r_idx, s, -2.0 * d)
        world.add_node_gradient(grad, r_idx, s + 1, 2.0 * d)
    return value, grad


def routing_length_linear(world: WorldGeometry) -> float:
    """Total routing length (reporting metric, not optimized)."""
    return float(sum(np.linalg.norm(b - a) for _, _, a, b in _segment_data(world)))


def routing_exponential(world: WorldGeometry, gamma: float):
    """Sum of exp(gamma * |segment|^2) - 1 with overflow capping."""
    value = 0.0
    grad = np.zeros(world.layout.dim)
    for r_idx, s, a, b in _segment_data(world):
        d = b - a
        z = gamma * float(d @ d)
        zc = min(z, _EXP_CAP)
        value += float(np.exp(zc)) - 1.0
        coeff = gamma * float(np.exp(zc)) if z <= _EXP_CAP else 0.0
        world.add_node_gradient(grad, r_idx, s, -2.0 * coeff * d)
        world.add_node_gradient(grad, r_idx, s + 1, 2.0 * coeff * d)
    return value, grad


def _boltzmann(v: np.ndarray, alpha: float):
    """Boltzmann softmax mean and its derivative weights."""
    z = alpha * v
    m = z.max()
    w = np.exp(z - m)
    p = w / w.sum()
    b = float(p @ v)
    dv = p * (1.0 + alpha * (v - b))
    return b, dv


def smooth_aabb_volume(world: WorldGeometry, alpha: float):
    """Smooth bounding-box volume of all body spheres, with gradient.

    Per axis the extent is a Boltzmann max of (center + radius) minus a
    Boltzmann min of (center - radius); the volume is their product.
    """
    centers = world.all_centers()
    radii = world.all_radii()
    extents = np.empty(3)
    dhi = []
    dlo = []
    for k in range(3):
        hi, dh = _boltzmann(centers[:, k] + radii, alpha)
        lo_neg, dl = _boltzmann(-(centers[:, k] - radii), alpha)
        extents[k] = hi + lo_neg  # hi - lo with lo = -lo_neg
        dhi.append(dh)
        dlo.append(dl)
    value = float(np.prod(extents))

    grad = np.zeros(world.layout.dim)
    coeff = np.zeros_like(centers)
    for k in range(3):
        rest = np.prod(np.delete(extents, k))
        coeff[:, k] = rest * (dhi[k] - dlo[k])
    off = 0
    for i, body in enumerate(world.bodies):
        world.add_center_gradient(grad, i, coeff[off:off + body.n_spheres])
        off += body.n_spheres
    return value, grad


def exact_aabb_volume(world: WorldGeometry) -> float:
    """Exact axis-aligned bounding box volume of all body spheres."""
    centers = world.all_centers()
    radii = world.all_radii()
    hi = (centers + radii[:, None]).max(axis=0)
    lo = (centers - radii[:, None]).min(axis=0)
    return float(np.prod(hi - lo))


def mean_pairwise_distance(world: WorldGeometry):
    """Mean distance between sphere centers of different bodies."""
    if len(world.bodies) < 2:
        raise ValueError("mean pairwise distance needs at least two bodies")
    total = 0.0
    grad = np.zeros(world.layout.dim)
    n_pairs = 0
    contrib = [np.zeros_like(c) for c in world.centers]
    for i in range(len(world.bodies)):
        for j in range(i + 1, len(world.bodies)):
            diff = world.centers[i][:, None, :] - world.centers[j][None, :, :]
            dist = np.sqrt(np.einsum("mnc,mnc->mn", diff, diff) + 1e-16)
            total += float(dist.sum())
            n_pairs += dist.size
            u = diff / dist[:, :, None]
            contrib[i] += u.sum(axis=1)
            contrib[j] -= u.sum(axis=0)
    value = total / n_pairs
    for i in range(len(world.bodies)):
        world.add_center_gradient(grad, i, contrib[i] / n_pairs)
    return value, grad


def routing_length_sq_at(x, spec) -> float:
    return routing_length_sq(spec.world(x))[0]


def routing_length_linear_at(x, spec) -> float:
    return routing_length_linear(spec.world(x))


def routing_exponential_at(x, spec, gamma: float = 1.0) -> float:
    return routing_exponential(spec.world(x), gamma)[0]


def smooth_aabb_volume_at(x, spec, alpha: float = 50.0) -> float:
    return smooth_aabb_volume(spec.world(x), alpha)[0]


def exact_aabb_volume_at(x, spec) -> float:
    return exact_aabb_volume(spec.world(x))


def mean_pairwise_distance_at(x, spec) -> float:
    return mean_pairwise_distance(spec.world(x))[0]


def total_objective(x: np.ndarray, spec: "ProblemSpec",
                    weights: ObjectiveWeights | None = None,
                    world: WorldGeometry | None = None):
    """Weighted aggregate objective.

    Returns (value, gradient, breakdown); the breakdown maps each term name
    to its raw (pre-weighting) value and the weighted total is exactly the
    sum of weight * term over the breakdown.
    """
    w = weights if weights is not None else spec.weights
    if world is None:
        world = spec.world(x)
    value = 0.0
    grad = np.zeros(world.layout.dim)
    breakdown = {}

    if w.routing > 0 or spec.routes:
        if w.routing_variant == "quadratic":
            fr, gr = routing_length_sq(world)
        else:
            fr, gr = routing_exponential(world, w.gamma)
        breakdown["routing"] = fr
        value += w.routing * fr
        grad += w.routing * gr
    if w.boundary > 0 and spec.boundary is not None:
        fb, gb = boundary_mod.boundary_terms(world, spec.boundary)
        breakdown["boundary"] = fb
        value += w.boundary * fb
        grad += w.boundary * gb
    if w.cog > 0:
        fc, gc = physics.cog_objective(world, spec.cog_target)
        breakdown["cog"] = fc
        value += w.cog * fc
        grad += w.cog * gc
    if w.inertia > 0:
        fi, gi = physics.inertia_objective(world, w.inertia_axis_weights)
        breakdown["inertia"] = fi
        value += w.inertia * fi
        grad += w.inertia * gi
    if w.volume > 0:
        fv, gv = smooth_aabb_volume(world, w.alpha_volume)
        breakdown["volume"] = fv
        value += w.volume * fv
        grad += w.volume * gv
    if w.mean_distance > 0:
        fm, gm = mean_pairwise_distance(world)
        breakdown["mean_distance"] = fm
        value += w.mean_distance * fm
        grad += w.mean_distance * gm
    return value, grad, breakdown
