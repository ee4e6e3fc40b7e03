"""Greedy disjoint ball filling of primitive solids.

Shapes are either unions of axis-aligned cells (boxes whose shared faces
coincide exactly) or a conical frustum.  The filler repeatedly places the
largest ball centered on an inclusive node grid that fits inside the shape
and does not overlap previously placed balls.  Ball radii are exact
distances to the shape boundary, so extremal balls are tangent to the
boundary to floating point accuracy.
"""

from __future__ import annotations

import warnings

import numpy as np


class FillWarning(UserWarning):
    """Raised when a shape cannot hold the requested number of balls."""


class CellShape:
    """Union of axis-aligned boxes with exactly matching shared faces."""

    def __init__(self, cells: list[tuple[np.ndarray, np.ndarray]]):
        self.cells = [(np.asarray(lo, float), np.asarray(hi, float)) for lo, hi in cells]
        self.lo = np.min([c[0] for c in self.cells], axis=0)
        self.hi = np.max([c[1] for c in self.cells], axis=0)
        self.faces = self._exposed_faces()

    def _exposed_faces(self):
        # face key: (axis, coord, rect-lo, rect-hi, direction)
        registry = {}
        for lo, hi in self.cells:
            for axis in range(3):
                u, v = [a for a in range(3) if a != axis]
                rect = (round(lo[u], 9), round(lo[v], 9), round(hi[u], 9), round(hi[v], 9))
                for coord, sign in ((lo[axis], -1), (hi[axis], +1)):
                    key = (axis, round(coord, 9), rect)
                    if key in registry:
                        del registry[key]  # shared face, interior
                    else:
                        registry[key] = (axis, coord, np.array([lo[u], lo[v]]),
                                         np.array([hi[u], hi[v]]), sign)
        return list(registry.values())

    def volume(self) -> float:
        return float(sum(np.prod(hi - lo) for lo, hi in self.cells))

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        inside = np.zeros(len(pts), dtype=bool)
        for lo, hi in self.cells:
            inside |= np.all((pts >= lo) & (pts <= hi), axis=1)
        return inside

    def boundary_distance(self, pts: np.ndarray) -> np.ndarray:
        """Distance from interior points to the boundary of the union."""
        pts = np.atleast_2d(pts)
        best = np.full(len(pts), np.inf)
        for axis, coord, rlo, rhi, _ in self.faces:
            u, v = [a for a in range(3) if a != axis]
            da = np.abs(pts[:, axis] - coord)
            pu = np.clip(pts[:, u], rlo[0], rhi[0])
            pv = np.clip(pts[:, v], rlo[1], rhi[1])
            off = np.hypot(pts[:, u] - pu, pts[:, v] - pv)
            best = np.minimum(best, np.where(off > 0, np.hypot(da, off), da))
        return best

    def grid_nodes(self, resolution: float) -> np.ndarray:
        axes = []
        for a in range(3):
            extent = self.hi[a] - self.lo[a]
            n = max(1, int(round(extent * resolution)))
            axes.append(np.linspace(self.lo[a], self.hi[a], n + 1))
        g = np.meshgrid(*axes, indexing="ij")
        return np.stack([gg.ravel() for gg in g], axis=1)

    def sample_surface(self, n_points: int) -> np.ndarray:
        """Deterministic, roughly area-uniform points on the exposed faces."""
        areas = []
        for axis, coord, rlo, rhi, _ in self.faces:
            areas.append(float(np.prod(rhi - rlo)))
        total = sum(areas)
        pts = []
        for (axis, coord, rlo, rhi, _), area in zip(self.faces, areas):
            k = max(1, int(round(n_points * area / total)))
            side = rhi - rlo
            n1 = max(1, int(round(np.sqrt(k * side[0] / max(side[1], 1e-12)))))
            n2 = max(1, int(round(k / n1)))
            g1 = rlo[0] + (np.arange(n1) + 0.5) / n1 * side[0]
            g2 = rlo[1] + (np.arange(n2) + 0.5) / n2 * side[1]
            u, v = [a for a in range(3) if a != axis]
            for a1 in g1:
                for a2 in g2:
                    p = np.empty(3)
                    p[axis] = coord
                    p[u] = a1
                    p[v] = a2
                    pts.append(p)
        return np.asarray(pts)


class FrustumShape:
    """Conical frustum along +x: radius interpolates r0 at x=0 to r1 at x=L."""

    def __init__(self, length: float, r0: float, r1: float):
        self.length = float(length)
        self.r0 = float(r0)
        self.r1 = float(r1)
        rmax = max(r0, r1)
        self.lo = np.array([0.0, -rmax, -rmax])
        self.hi = np.array([length, rmax, rmax])

    def _radius_at(self, x):
        return self.r0 + (self.r1 - self.r0) * x / self.length

    def volume(self) -> float:
        return float(np.pi * self.length / 3.0
                     * (self.r0 ** 2 + self.r0 * self.r1 + self.r1 ** 2))

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        rho = np.hypot(pts[:, 1], pts[:, 2])
        return (pts[:, 0] >= 0) & (pts[:, 0] <= self.length) & (rho <= self._radius_at(pts[:, 0]))

    def boundary_distance(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        rho = np.hypot(pts[:, 1], pts[:, 2])
        caps = np.minimum(pts[:, 0], self.length - pts[:, 0])
        # Lateral surface: point-to-segment distance in the (x, rho) half-plane.
        ax = np.array([0.0, self.r0])
        bx = np.array([self.length, self.r1])
        v = bx - ax
        q = np.stack([pts[:, 0], rho], axis=1) - ax
        t = np.clip(q @ v / (v @ v), 0.0, 1.0)
        lateral = np.linalg.norm(q - t[:, None] * v, axis=1)
        return np.minimum(caps, lateral)

    def grid_nodes(self, resolution: float) -> np.ndarray:
        axes = []
        for a in range(3):
            extent = self.hi[a] - self.lo[a]
            n = max(1, int(round(extent * resolution)))
            axes.append(np.linspace(self.lo[a], self.hi[a], n + 1))
        g = np.meshgrid(*axes, indexing="ij")
        return np.stack([gg.ravel() for gg in g], axis=1)

    def sample_surface(self, n_points: int) -> np.ndarray:
        area_lat = np.pi * (self.r0 + self.r1) * np.hypot(self.length, self.r1 - self.r0)
        area_caps = np.pi * (self.r0 ** 2 + self.r1 ** 2)
        n_lat = max(4, int(round(n_points * area_lat / (area_lat + area_caps))))
        pts = []
        n_rows = max(2, int(round(np.sqrt(n_lat / 4))))
        per_row = max(4, n_lat // n_rows)
        for i in range(n_rows):
            x = (i + 0.5) / n_rows * self.length
            r = self._radius_at(x)
            ang = 2 * np.pi * (np.arange(per_row) + 0.5 * (i % 2)) / per_row
            for a in ang:
                pts.append([x, r * np.cos(a), r * np.sin(a)])
        n_cap = max(4, (n_points - len(pts)) // 2)
        for x, r in ((0.0, self.r0), (self.length, self.r1)):
            n_rings = max(1, int(round(np.sqrt(n_cap / 4))))
            for i in range(n_rings):
                rr = (i + 0.5) / n_rings * r
                m = max(4, int(round(2 * np.pi * rr / (r / n_rings))))
                ang = 2 * np.pi * (np.arange(m) + 0.5) / m
                for a in ang:
                    pts.append([x, rr * np.cos(a), rr * np.sin(a)])
        return np.asarray(pts)


def greedy_fill(shape, n_balls: int, resolution: float = 48.0,
                min_radius: float = 1e-4) -> tuple[np.ndarray, np.ndarray]:
    """Greedy maximal disjoint ball packing of a shape.

    Candidate centers are the inclusive grid nodes inside the shape; each
    step places the largest ball that fits inside the shape and clear of
    the balls already placed.  Deterministic: ties resolve to the lowest
    grid index.
    """
    nodes = shape.grid_nodes(resolution)
    inside = shape.contains(nodes)
    nodes = nodes[inside]
    cap = shape.boundary_distance(nodes)
    keep = cap > min_radius
    nodes, cap = nodes[keep], cap[keep]

    centers = []
    radii = []
    for _ in range(n_balls):
        if cap.size == 0 or cap.max() <= min_radius:
            warnings.warn(
                f"shape holds only {len(centers)} of {n_balls} requested balls "
                f"at resolution {resolution}",
                FillWarning,
                stacklevel=2,
            )
            break
        k = int(np.argmax(cap))
        c, r = nodes[k], float(cap[k])
        centers.append(c.copy())
        radii.append(r)
        cap = np.minimum(cap, np.linalg.norm(nodes - c, axis=1) - r)
    return np.asarray(centers), np.asarray(radii)


def fill_ratio(shape, radii: np.ndarray) -> float:
    return float(np.sum(4.0 / 3.0 * np.pi * np.asarray(radii) ** 3) / shape.volume())
