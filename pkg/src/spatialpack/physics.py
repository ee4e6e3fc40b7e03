"""Mass properties of the placed assembly.

Center of gravity is the mass-weighted mean of the world-frame body CoGs.
The total inertia tensor about the global CoG rotates each body tensor into
the workspace frame and applies the parallel-axis theorem.
"""

from __future__ import annotations

import numpy as np

from .geometry import WorldGeometry


def body_cogs(world: WorldGeometry) -> np.ndarray:
    """World-frame center of gravity of each body, shape (n, 3)."""
    return np.stack([
        world.rot[i] @ body.cog_local + world.poses[i, 3:6]
        for i, body in enumerate(world.bodies)
    ])


def global_cog(world: WorldGeometry) -> np.ndarray:
    """Mass-weighted mean of the body CoGs."""
    masses = np.array([b.mass for b in world.bodies])
    total = masses.sum()
    if total <= 0:
        raise ValueError("total mass must be positive")
    return masses @ body_cogs(world) / total


def inertia_about_global_cog(world: WorldGeometry) -> np.ndarray:
    """Total inertia tensor about the global CoG in the workspace frame."""
    masses = np.array([b.mass for b in world.bodies])
    p_g = global_cog(world)
    cogs = body_cogs(world)
    total = np.zeros((3, 3))
    for i, body in enumerate(world.bodies):
        r = world.rot[i]
        d = cogs[i] - p_g
        total += r @ body.inertia_local @ r.T
        total += masses[i] * (float(d @ d) * np.eye(3) - np.outer(d, d))
    return 0.5 * (total + total.T)


def cog_objective(world: WorldGeometry, target: np.ndarray):
    """Squared distance of the global CoG to its target, with gradient."""
    target = np.asarray(target, float)
    masses = np.array([b.mass for b in world.bodies])
    total = masses.sum()
    p_g = global_cog(world)
    resid = p_g - target
    value = float(resid @ resid)

    grad = np.zeros(world.layout.dim)
    for i, body in enumerate(world.bodies):
        w = 2.0 * masses[i] / total * resid
        sl = world.layout.body_slice(i)
        grad[sl.start:sl.start + 3] += np.einsum(
            "kab,b->ka", world.drot[i], body.cog_local) @ w
        grad[sl.start + 3:sl.start + 6] += w
    return value, grad


def inertia_objective(world: WorldGeometry, axis_weights=(1.0, 1.0, 1.0)):
    """Weighted sum of the diagonal inertia entries, with gradient.

    The cross terms through the global CoG cancel exactly
    (sum_i m_i d_i = 0), so each body contributes independently.
    """
    w = np.asarray(axis_weights, float)
    masses = np.array([b.mass for b in world.bodies])
    p_g = global_cog(world)
    cogs = body_cogs(world)

    value = 0.0
    grad = np.zeros(world.layout.dim)
    for i, body in enumerate(world.bodies):
        r = world.rot[i]
        d = cogs[i] - p_g
        rot_part = r @ body.inertia_local @ r.T
        value += float(w @ np.diag(rot_part))
        value += masses[i] * float(w.sum() * (d @ d) - w @ (d * d))

        g_d = 2.0 * masses[i] * (w.sum() * d - w * d)
        sl = world.layout.body_slice(i)
        dm = np.einsum("kab,b->ka", world.drot[i], body.cog_local)
        grad[sl.start:sl.start + 3] += dm @ g_d
        grad[sl.start + 3:sl.start + 6] += g_d
        for k in range(3):
            dr_part = world.drot[i][k] @ body.inertia_local @ r.T
            grad[sl.start + k] += 2.0 * float(w @ np.diag(dr_part))
    return value, grad


def f_cog(x: np.ndarray, spec, target) -> float:
    return cog_objective(spec.world(x), target)[0]


def f_inertia(x: np.ndarray, spec, axis_weights=(1.0, 1.0, 1.0)) -> float:
    return inertia_objective(spec.world(x), axis_weights)[0]


def sphere_cloud_mass_properties(centers: np.ndarray, radii: np.ndarray,
                                 mass: float):
    """CoG and inertia tensor of a body modeled as solid uniform spheres.

    The body mass is split across spheres proportionally to volume; each
    sphere contributes its solid-sphere tensor plus a parallel-axis term
    about the cloud CoG.  Used to give benchmark bodies plausible inertia.
    """
    centers = np.atleast_2d(np.asarray(centers, float))
    radii = np.atleast_1d(np.asarray(radii, float))
    vol = radii ** 3
    m = mass * vol / vol.sum()
    cog = m @ centers / mass
    inertia = np.zeros((3, 3))
    for mk, c, r in zip(m, centers, radii):
        inertia += 0.4 * mk * r * r * np.eye(3)
        d = c - cog
        inertia += mk * (float(d @ d) * np.eye(3) - np.outer(d, d))
    return cog, inertia
