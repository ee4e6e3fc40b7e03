"""Rigid bodies, routes and the packed design vector.

Bodies are rigid objects described by a set of pairwise disjoint spheres in
a local frame, plus attachment ports and mass properties.  A pose is a
yaw/pitch/roll rotation followed by a translation; the rotation matrix is
the product Rz(yaw) @ Ry(pitch) @ Rx(roll).

The design vector packs all body poses (6 numbers each, in the order
yaw, pitch, roll, x, y, z) followed by the free control points of every
route (3 numbers per point, route by route).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Guard added under every Euclidean norm so gradients stay finite when two
# points coincide during optimization.
NORM_GUARD = 1e-16

# Construction-time tolerance for the pairwise-disjoint sphere check.
DISJOINT_TOL = 1e-9


def guarded_norm(v: np.ndarray, axis: int = -1) -> np.ndarray:
    """Euclidean norm with a tiny additive guard under the square root."""
    return np.sqrt(np.sum(v * v, axis=axis) + NORM_GUARD)


@dataclass(frozen=True)
class Sphere:
    """A ball given by its center and (positive) radius."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        center = np.asarray(self.center, dtype=float)
        if center.shape != (3,) or not np.all(np.isfinite(center)):
            raise ValueError("sphere center must be a finite 3-vector")
        if not (self.radius > 0.0 and math.isfinite(self.radius)):
            raise ValueError(f"sphere radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", center)


@dataclass
class Body:
    """A rigid object: disjoint spheres, ports and mass properties.

    All geometry is expressed in the body's local frame.  ``inertia_local``
    is the inertia tensor about ``cog_local``.
    """

    id: str
    centers: np.ndarray          # (n_spheres, 3)
    radii: np.ndarray            # (n_spheres,)
    ports: np.ndarray            # (n_ports, 3), may be empty
    mass: float = 1.0
    cog_local: np.ndarray = field(default_factory=lambda: np.zeros(3))
    inertia_local: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))

    def __post_init__(self):
        self.centers = np.atleast_2d(np.asarray(self.centers, dtype=float))
        self.radii = np.atleast_1d(np.asarray(self.radii, dtype=float))
        self.ports = np.asarray(self.ports, dtype=float).reshape(-1, 3)
        self.cog_local = np.asarray(self.cog_local, dtype=float)
        self.inertia_local = np.asarray(self.inertia_local, dtype=float)
        if self.centers.shape[0] == 0:
            raise ValueError(f"body {self.id!r} has no spheres")
        if self.centers.shape != (self.radii.shape[0], 3):
            raise ValueError("sphere centers/radii shape mismatch")
        if np.any(self.radii <= 0.0):
            raise ValueError(f"body {self.id!r} has a non-positive sphere radius")
        if not (self.mass > 0.0):
            raise ValueError(f"body {self.id!r} mass must be positive")
        if np.max(np.abs(self.inertia_local - self.inertia_local.T)) > 1e-12:
            raise ValueError(f"body {self.id!r} inertia tensor is not symmetric")
        if np.linalg.eigvalsh(self.inertia_local).min() < -1e-9:
            raise ValueError(f"body {self.id!r} inertia tensor is not PSD")
        gap = self.min_pairwise_clearance()
        if gap < -DISJOINT_TOL:
            raise ValueError(
                f"body {self.id!r} spheres overlap (min clearance {gap:.3e})"
            )

    @property
    def n_spheres(self) -> int:
        return self.centers.shape[0]

    def min_pairwise_clearance(self) -> float:
        """Smallest surface-to-surface gap between this body's spheres."""
        if self.n_spheres < 2:
            return math.inf
        d = np.linalg.norm(self.centers[:, None, :] - self.centers[None, :, :], axis=-1)
        gap = d - (self.radii[:, None] + self.radii[None, :])
        iu = np.triu_indices(self.n_spheres, k=1)
        return float(gap[iu].min())

    def spheres(self) -> list[Sphere]:
        return [Sphere(c, float(r)) for c, r in zip(self.centers, self.radii)]

    def enclosing_sphere(self) -> tuple[np.ndarray, float]:
        """Local-frame sphere that contains every sphere of the body."""
        return enclosing_sphere(self.centers, self.radii)


@dataclass
class Pose:
    """Rigid placement: yaw about z, pitch about y, roll about x, then a shift."""

    yaw: float = 0.0
    pitch: float = 0.0
    roll: float = 0.0
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def as_array(self) -> np.ndarray:
        t = np.asarray(self.translation, dtype=float)
        return np.array([self.yaw, self.pitch, self.roll, t[0], t[1], t[2]])

    @staticmethod
    def from_array(row: np.ndarray) -> "Pose":
        row = np.asarray(row, dtype=float)
        return Pose(row[0], row[1], row[2], row[3:6].copy())


@dataclass
class Route:
    """A piecewise-linear connection between two body ports.

    ``n_control_points`` interior nodes are free optimization variables; the
    polyline therefore has ``n_control_points + 1`` segments.  ``radius`` is
    the routing tube radius used in clearance constraints.  ``exemption``
    selects which spheres of the endpoint bodies are excluded from
    route-object clearance: "auto" exempts, for the incident segment only,
    spheres whose surface passes within twice the tube radius of the port;
    "endpoints" exempts both endpoint bodies entirely (used for routes that
    attach to interior ports).
    """

    id: str
    a: tuple[int, int]           # (body index, port index)
    b: tuple[int, int]
    n_control_points: int = 0
    radius: float = 0.0
    exemption: str = "auto"

    def __post_init__(self):
        if self.n_control_points < 0:
            raise ValueError("n_control_points must be >= 0")
        if self.radius < 0:
            raise ValueError("route radius must be >= 0")
        if self.exemption not in ("auto", "endpoints"):
            raise ValueError(f"unknown exemption policy {self.exemption!r}")

    @property
    def n_segments(self) -> int:
        return self.n_control_points + 1

    @property
    def n_nodes(self) -> int:
        return self.n_control_points + 2


def rotation_matrix(yaw: float, pitch: float, roll: float) -> np.ndarray:
    """Rotation matrix Rz(yaw) @ Ry(pitch) @ Rx(roll)."""
    cz, sz = math.cos(yaw), math.sin(yaw)
    cy, sy = math.cos(pitch), math.sin(pitch)
    cx, sx = math.cos(roll), math.sin(roll)
    return np.array(
        [
            [cz * cy, cz * sy * sx - sz * cx, cz * sy * cx + sz * sx],
            [sz * cy, sz * sy * sx + cz * cx, sz * sy * cx - cz * sx],
            [-sy, cy * sx, cy * cx],
        ]
    )


def rotation_derivatives(yaw: float, pitch: float, roll: float) -> np.ndarray:
    """Stack of dR/dyaw, dR/dpitch, dR/droll, shape (3, 3, 3)."""
    cz, sz = math.cos(yaw), math.sin(yaw)
    cy, sy = math.cos(pitch), math.sin(pitch)
    cx, sx = math.cos(roll), math.sin(roll)
    rz = np.array([[cz, -sz, 0.0], [sz, cz, 0.0], [0.0, 0.0, 1.0]])
    ry = np.array([[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]])
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cx, -sx], [0.0, sx, cx]])
    dz = np.array([[-sz, -cz, 0.0], [cz, -sz, 0.0], [0.0, 0.0, 0.0]])
    dy = np.array([[-sy, 0.0, cy], [0.0, 0.0, 0.0], [-cy, 0.0, -sy]])
    dx = np.array([[0.0, 0.0, 0.0], [0.0, -sx, -cx], [0.0, cx, -sx]])
    return np.stack([dz @ ry @ rx, rz @ dy @ rx, rz @ ry @ dx])


def rotation_to_angles(r: np.ndarray) -> tuple[float, float, float]:
    """Recover (yaw, pitch, roll) from a rotation matrix.

    Inverse of :func:`rotation_matrix` away from the pitch = +-pi/2 gimbal
    lock, where yaw is chosen as 0.
    """
    sy = -float(r[2, 0])
    sy = max(-1.0, min(1.0, sy))
    pitch = math.asin(sy)
    if abs(sy) < 1.0 - 1e-12:
        yaw = math.atan2(r[1, 0], r[0, 0])
        roll = math.atan2(r[2, 1], r[2, 2])
    else:
        yaw = 0.0
        roll = math.atan2(-r[0, 1], r[1, 1]) * (1.0 if sy > 0 else -1.0)
    return yaw, pitch, roll


def transform_point(pose: Pose, p_local: np.ndarray) -> np.ndarray:
    """Map a local-frame point to the workspace frame."""
    r = rotation_matrix(pose.yaw, pose.pitch, pose.roll)
    return r @ np.asarray(p_local, dtype=float) + np.asarray(pose.translation, dtype=float)


def enclosing_sphere(centers: np.ndarray, radii: np.ndarray) -> tuple[np.ndarray, float]:
    """Approximate minimal sphere containing all given spheres.

    Ritter's two-pass bounding sphere over the centers, then the radius is
    grown until every member sphere is contained.  Soundness (containment)
    is guaranteed; minimality is approximate.
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    p0 = centers[0]
    i = int(np.argmax(np.linalg.norm(centers - p0, axis=1)))
    j = int(np.argmax(np.linalg.norm(centers - centers[i], axis=1)))
    c = 0.5 * (centers[i] + centers[j])
    r = 0.5 * float(np.linalg.norm(centers[i] - centers[j]))
    for p in centers:
        d = float(np.linalg.norm(p - c))
        if d > r:
            # Grow and shift toward the outlier.
            r_new = 0.5 * (r + d)
            c = c + (d - r_new) / d * (p - c)
            r = r_new
    r = float(np.max(np.linalg.norm(centers - c, axis=1) + radii))
    return c, r


class Layout:
    """Index bookkeeping for the packed design vector."""

    def __init__(self, n_bodies: int, control_point_counts: list[int]):
        self.n_bodies = n_bodies
        self.cp_counts = list(control_point_counts)
        self.n_control_points = sum(self.cp_counts)
        self.dim = 6 * n_bodies + 3 * self.n_control_points
        self._cp_offsets = []
        off = 6 * n_bodies
        for k in self.cp_counts:
            self._cp_offsets.append(off)
            off += 3 * k

    def body_slice(self, i: int) -> slice:
        return slice(6 * i, 6 * i + 6)

    def cp_slice(self, route_idx: int) -> slice:
        off = self._cp_offsets[route_idx]
        return slice(off, off + 3 * self.cp_counts[route_idx])

    def pack(self, poses, control_points=None) -> np.ndarray:
        """Assemble the flat design vector from poses and control points."""
        poses = [p.as_array() if isinstance(p, Pose) else np.asarray(p, float) for p in poses]
        if len(poses) != self.n_bodies:
            raise ValueError(f"expected {self.n_bodies} poses, got {len(poses)}")
        control_points = control_points if control_points is not None else []
        if len(control_points) != len(self.cp_counts):
            raise ValueError(
                f"expected control points for {len(self.cp_counts)} routes, "
                f"got {len(control_points)}"
            )
        x = np.empty(self.dim)
        for i, p in enumerate(poses):
            if p.shape != (6,):
                raise ValueError("each pose must have 6 entries")
            x[self.body_slice(i)] = p
        for r, pts in enumerate(control_points):
            pts = np.asarray(pts, dtype=float).reshape(-1, 3)
            if pts.shape[0] != self.cp_counts[r]:
                raise ValueError(
                    f"route {r} expects {self.cp_counts[r]} control points, "
                    f"got {pts.shape[0]}"
                )
            x[self.cp_slice(r)] = pts.ravel()
        return x

    def unpack(self, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        """Split the flat vector into a (n_bodies, 6) pose array and per-route
        (k, 3) control point arrays."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"design vector must have length {self.dim}, got {x.shape}")
        poses = x[: 6 * self.n_bodies].reshape(self.n_bodies, 6)
        cps = [x[self.cp_slice(r)].reshape(-1, 3) for r in range(len(self.cp_counts))]
        return poses, cps


class WorldGeometry:
    """World-frame state of all bodies and routes at a given design vector.

    Caches rotation matrices, their angle derivatives, transformed sphere
    centers and ports, and the route polylines.  Everything downstream
    (objectives, constraints, physics) evaluates against this.
    """

    def __init__(self, bodies: list[Body], routes: list[Route], layout: Layout, x: np.ndarray):
        self.bodies = bodies
        self.routes = routes
        self.layout = layout
        self.x = np.asarray(x, dtype=float)
        self.poses, self.control_points = layout.unpack(self.x)

        n = len(bodies)
        self.rot = np.empty((n, 3, 3))
        self.drot = np.empty((n, 3, 3, 3))
        self.centers = []       # per body (n_i, 3) world sphere centers
        self.dcenters = []      # per body (3, n_i, 3): d center / d angle_k
        self.ports = []         # per body (m_i, 3)
        self.dports = []        # per body (3, m_i, 3)
        for i, body in enumerate(bodies):
            yaw, pitch, roll = self.poses[i, 0], self.poses[i, 1], self.poses[i, 2]
            t = self.poses[i, 3:6]
            r = rotation_matrix(yaw, pitch, roll)
            dr = rotation_derivatives(yaw, pitch, roll)
            self.rot[i] = r
            self.drot[i] = dr
            self.centers.append(body.centers @ r.T + t)
            self.dcenters.append(np.einsum("kab,nb->kna", dr, body.centers))
            self.ports.append(body.ports @ r.T + t if body.ports.size else body.ports.copy())
            self.dports.append(
                np.einsum("kab,nb->kna", dr, body.ports) if body.ports.size
                else np.zeros((3, 0, 3))
            )

        # Route nodes: [port_a, cp_1, ..., cp_k, port_b] per route, plus a
        # descriptor for each node used to scatter gradients back into x.
        self.route_nodes = []
        self.node_refs = []     # ("port", body, port_idx) or ("cp", route, k)
        for r_idx, route in enumerate(routes):
            nodes = np.empty((route.n_nodes, 3))
            refs = []
            ba, pa = route.a
            bb, pb = route.b
            nodes[0] = self.ports[ba][pa]
            refs.append(("port", ba, pa))
            for k in range(route.n_control_points):
                nodes[1 + k] = self.control_points[r_idx][k]
                refs.append(("cp", r_idx, k))
            nodes[-1] = self.ports[bb][pb]
            refs.append(("port", bb, pb))
            self.route_nodes.append(nodes)
            self.node_refs.append(refs)

    def all_centers(self) -> np.ndarray:
        """World sphere centers of every body stacked into one (N, 3) array."""
        return np.concatenate(self.centers, axis=0)

    def all_radii(self) -> np.ndarray:
        return np.concatenate([b.radii for b in self.bodies])

    def sphere_body_index(self) -> np.ndarray:
        return np.concatenate(
            [np.full(b.n_spheres, i, dtype=int) for i, b in enumerate(self.bodies)]
        )

    def add_center_gradient(self, grad: np.ndarray, body: int, weights: np.ndarray) -> None:
        """Accumulate d(sum_n w_n . center_n)/dx into ``grad``.

        ``weights`` has shape (n_i, 3): one 3-vector per sphere of ``body``.
        """
        sl = self.layout.body_slice(body)
        grad[sl.start:sl.start + 3] += np.einsum("kna,na->k", self.dcenters[body], weights)
        grad[sl.start + 3:sl.start + 6] += weights.sum(axis=0)

    def add_node_gradient(self, grad: np.ndarray, route: int, node: int, w: np.ndarray) -> None:
        """Accumulate d(w . node)/dx for one route node (3-vector weight)."""
        kind, a, b = self.node_refs[route][node]
        if kind == "cp":
            sl = self.layout.cp_slice(a)
            grad[sl.start + 3 * b:sl.start + 3 * b + 3] += w
        else:
            sl = self.layout.body_slice(a)
            grad[sl.start:sl.start + 3] += self.dports[a][:, b, :] @ w
            grad[sl.start + 3:sl.start + 6] += w


def route_nodes(route: Route, bodies: list[Body], layout: Layout,
                routes: list[Route], x: np.ndarray) -> np.ndarray:
    """Ordered world-frame node list of one route at design vector ``x``."""
    idx = routes.index(route)
    for endpoint in (route.a, route.b):
        body_idx, port_idx = endpoint
        if body_idx >= len(bodies) or port_idx >= bodies[body_idx].ports.shape[0]:
            raise ValueError(f"route {route.id!r} references missing port {endpoint}")
    world = WorldGeometry(bodies, routes, layout, x)
    return world.route_nodes[idx]
