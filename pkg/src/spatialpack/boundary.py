"""Smooth containment of object spheres in a non-convex design boundary.

The boundary is a set of disjoint interior balls plus points sampled on the
bounding surface.  An object sphere is inside when its center lies in some
boundary ball and its surface clears every surface point.  The smooth
objective replaces the per-sphere min operators with log-sum-exp soft
operators and pushes both conditions through a softplus hinge, yielding a
penalty that is zero (to machine precision) well inside the boundary and
grows linearly with the escape distance outside.  The evaluation is exact
in the hard variant used for validation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _ballfill
from .geometry import NORM_GUARD, Sphere, WorldGeometry


class CoverageGapWarning(UserWarning):
    """Interior voxels of a boundary fixture are covered by no boundary ball."""


def soft_max(values, alpha: float) -> float:
    """Log-sum-exp upper bound of max: max(v) <= M+ <= max(v) + log(n)/alpha."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("soft_max of an empty set")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    m = v.max()
    return float(m + np.log(np.sum(np.exp(alpha * (v - m)))) / alpha)


def soft_min(values, alpha: float) -> float:
    """Log-sum-exp lower bound of min: min(v) - log(n)/alpha <= M- <= min(v)."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("soft_min of an empty set")
    return -soft_max(-v, alpha)


def hinge(v: float, beta: float) -> float:
    """Smooth hinge softplus(beta*v)/beta: -> 0 for v << 0, -> v for v >> 0."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    z = beta * v
    if z > 30.0:
        return float(v + np.log1p(np.exp(-z)) / beta)
    return float(np.log1p(np.exp(z)) / beta)


def phi(boundary_sphere: Sphere, center: np.ndarray) -> float:
    """Signed distance of a point to a boundary ball; negative inside."""
    return float(np.linalg.norm(boundary_sphere.center - np.asarray(center, float))
                 - boundary_sphere.radius)


def rho(surface_point: np.ndarray, s: Sphere) -> float:
    """Gap between an object sphere and one surface point; positive clears."""
    return float(np.linalg.norm(np.asarray(surface_point, float) - s.center) - s.radius)


@dataclass
class BoundaryModel:
    """Boundary balls, surface points and smoothing parameters."""

    sphere_centers: np.ndarray            # (B, 3)
    sphere_radii: np.ndarray              # (B,)
    surface_points: np.ndarray            # (P, 3)
    alpha_union: float = 50.0
    alpha_points: float = 50.0
    beta: float = 20.0
    delta_u: float = 0.01
    delta_p: float = 0.01
    w_union: float = 1.0
    w_points: float = 1.0
    coverage: float = field(default=1.0, compare=False)

    def __post_init__(self):
        self.sphere_centers = np.atleast_2d(np.asarray(self.sphere_centers, float))
        self.sphere_radii = np.atleast_1d(np.asarray(self.sphere_radii, float))
        self.surface_points = np.atleast_2d(np.asarray(self.surface_points, float))
        if self.sphere_centers.shape[0] == 0 or self.surface_points.shape[0] == 0:
            raise ValueError("boundary model needs at least one ball and one surface point")
        for name in ("alpha_union", "alpha_points", "beta"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _softplus(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    small = z <= 30.0
    out[small] = np.log1p(np.exp(z[small]))
    out[~small] = z[~small] + np.log1p(np.exp(-z[~small]))
    return out


def _cross_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise distances between row sets, (len(a), len(b)), guarded."""
    sq = (np.sum(a * a, axis=1)[:, None] + np.sum(b * b, axis=1)[None, :]
          - 2.0 * (a @ b.T))
    return np.sqrt(np.maximum(sq, 0.0) + NORM_GUARD)


def _softmin_rows(values: np.ndarray, alpha: float):
    """Row-wise soft min and its weights (each row sums to one).

    Exponents are clamped at -60 after the max shift: the discarded weights
    are below 1e-26 and the clamp keeps every intermediate a normal float
    (denormals make exp and the downstream products an order of magnitude
    slower).
    """
    z = -alpha * values
    m = z.max(axis=1, keepdims=True)
    w = np.exp(np.maximum(z - m, -60.0))
    wsum = w.sum(axis=1)
    softmin = -(m[:, 0] + np.log(wsum)) / alpha
    return softmin, w / wsum[:, None]


def _per_sphere_terms(centers: np.ndarray, radii: np.ndarray, bm: BoundaryModel):
    """Soft union score, soft point clearance and their center gradients.

    Returns (phi_tilde, rho_tilde, dphi_dc, drho_dc) with shapes
    (N,), (N,), (N, 3), (N, 3).  The gradient of a row-wise soft min of
    distances is a convex combination of unit vectors toward the sites,
    assembled as two matrix products to avoid (N, sites, 3) temporaries.
    """
    dist_b = _cross_distances(centers, bm.sphere_centers)
    phi_tilde, wb = _softmin_rows(dist_b - bm.sphere_radii[None, :], bm.alpha_union)
    coeff = wb / dist_b
    dphi_dc = coeff.sum(axis=1)[:, None] * centers - coeff @ bm.sphere_centers

    dist_p = _cross_distances(centers, bm.surface_points)
    rho_tilde, wp = _softmin_rows(dist_p - radii[:, None], bm.alpha_points)
    coeff = wp / dist_p
    drho_dc = coeff.sum(axis=1)[:, None] * centers - coeff @ bm.surface_points
    return phi_tilde, rho_tilde, dphi_dc, drho_dc


def boundary_terms(world: WorldGeometry, bm: BoundaryModel):
    """Boundary objective value and its gradient w.r.t. the design vector."""
    centers = world.all_centers()
    radii = world.all_radii()
    phi_t, rho_t, dphi_dc, drho_dc = _per_sphere_terms(centers, radii, bm)

    zu = bm.beta * (phi_t + bm.delta_u)
    zp = bm.beta * (-rho_t - bm.delta_p)
    value = float(bm.w_union * np.sum(_softplus(zu)) / bm.beta
                  + bm.w_points * np.sum(_softplus(zp)) / bm.beta)

    coeff = (bm.w_union * _sigmoid(zu))[:, None] * dphi_dc \
        - (bm.w_points * _sigmoid(zp))[:, None] * drho_dc
    grad = np.zeros(world.layout.dim)
    off = 0
    for i, body in enumerate(world.bodies):
        world.add_center_gradient(grad, i, coeff[off:off + body.n_spheres])
        off += body.n_spheres
    return value, grad


def boundary_objective(x: np.ndarray, spec, bm: BoundaryModel) -> float:
    """Scalar smooth boundary penalty at design vector ``x``."""
    value, _ = boundary_terms(spec.world(x), bm)
    return value


def per_sphere_inclusion(centers: np.ndarray, radii: np.ndarray,
                         bm: BoundaryModel) -> np.ndarray:
    """Exact inside test per object sphere: covered center and clear surface."""
    d_b = np.linalg.norm(centers[:, None, :] - bm.sphere_centers[None, :, :], axis=2)
    phi_best = (d_b - bm.sphere_radii[None, :]).min(axis=1)
    d_p = np.linalg.norm(centers[:, None, :] - bm.surface_points[None, :, :], axis=2)
    rho_worst = (d_p - radii[:, None]).min(axis=1)
    return (phi_best <= 0.0) & (rho_worst >= 0.0)


def hard_inclusion_check(x: np.ndarray, spec, bm: BoundaryModel):
    """Exact inclusion state of all object spheres.

    Returns (phi_max, rho_min, inside): phi_max is the worst best-covering
    score over object spheres (each sphere scored against its nearest
    boundary ball), rho_min the worst surface clearance.  The assembly is
    inside iff phi_max <= 0 and rho_min >= 0.
    """
    world = spec.world(x)
    centers = world.all_centers()
    radii = world.all_radii()
    d_b = np.linalg.norm(centers[:, None, :] - bm.sphere_centers[None, :, :], axis=2)
    phi_max = float((d_b - bm.sphere_radii[None, :]).min(axis=1).max())
    d_p = np.linalg.norm(centers[:, None, :] - bm.surface_points[None, :, :], axis=2)
    rho_min = float((d_p - radii[:, None]).min())
    return phi_max, rho_min, bool(phi_max <= 0.0 and rho_min >= 0.0)


def _fixture_from_shape(shape, n_balls: int, resolution: float,
                        n_surface_points: int, **params) -> BoundaryModel:
    centers, radii = _ballfill.greedy_fill(shape, n_balls, resolution=resolution)
    points = shape.sample_surface(n_surface_points)

    # Coverage gap report: interior probe nodes lying in no boundary ball.
    probes = shape.grid_nodes(resolution)
    probes = probes[shape.contains(probes)]
    probes = probes[shape.boundary_distance(probes) > 1e-9]
    covered = np.zeros(len(probes), dtype=bool)
    for c, r in zip(centers, radii):
        covered |= np.linalg.norm(probes - c, axis=1) <= r
    coverage = float(covered.mean()) if len(probes) else 1.0
    if coverage < 1.0:
        warnings.warn(
            f"boundary fixture leaves {(1.0 - coverage):.1%} of interior "
            f"probe points outside every boundary ball",
            CoverageGapWarning,
            stacklevel=2,
        )
    return BoundaryModel(centers, radii, points, coverage=coverage, **params)


def cube_boundary(side: float = 1.0, n_balls: int = 60, resolution: float = 16.0,
                  n_surface_points: int = 600, center=(0.0, 0.0, 0.0),
                  **params) -> BoundaryModel:
    """Axis-aligned cube fixture centered at ``center``."""
    c = np.asarray(center, float)
    h = side / 2.0
    shape = _ballfill.CellShape([(c - h, c + h)])
    res = resolution / side  # nodes per unit length
    return _fixture_from_shape(shape, n_balls, res, n_surface_points, **params)


def frustum_boundary(length: float = 6.0, r0: float = 2.0, r1: float = 0.8,
                     n_balls: int = 80, resolution: float = 16.0,
                     n_surface_points: int = 600, **params) -> BoundaryModel:
    """Tail-cone style frustum fixture along +x."""
    shape = _ballfill.FrustumShape(length, r0, r1)
    res = resolution / max(length, 2 * max(r0, r1))
    return _fixture_from_shape(shape, n_balls, res, n_surface_points, **params)
