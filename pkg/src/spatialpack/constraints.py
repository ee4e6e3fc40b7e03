"""Clearance constraints between bodies and routes.

All constraints follow the negative-null convention: a configuration is
feasible iff every entry of the assembled vector is <= 0.  Three kinds are
produced: object-object sphere clearances, route-object segment/sphere
clearances and route-route segment clearances, plus enclosing-sphere rows
for object pairs excluded from detailed checking by an active-set solver.

Soft-sum mode collapses each kind into a single smooth row
(1/beta) * sum_k softplus(beta * g_k) - eps, which upper-bounds the worst
violation by log(2)/beta + eps whenever the row is non-positive.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional

import numpy as np

from .geometry import NORM_GUARD, Sphere, WorldGeometry, guarded_norm

if TYPE_CHECKING:  # pragma: no cover
    from .problem import ProblemSpec

_EPS = 1e-14


def _cross_dist(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise guarded distances between row sets as one matrix product."""
    sq = (np.sum(a * a, axis=1)[:, None] + np.sum(b * b, axis=1)[None, :]
          - 2.0 * (a @ b.T))
    return np.sqrt(np.maximum(sq, 0.0) + NORM_GUARD)


@dataclass
class ConstraintMode:
    """Absolute (one row per clearance) or SoftSum (one row per kind)."""

    kind: str = "absolute"          # "absolute" | "softsum"
    beta: float = 50.0              # soft-sum sharpness
    eps: float = 1e-3               # soft-sum slack margin

    def __post_init__(self):
        if self.kind not in ("absolute", "softsum"):
            raise ValueError(f"unknown constraint mode {self.kind!r}")
        if self.beta <= 0:
            raise ValueError("soft-sum beta must be positive")
        if self.eps < 0:
            raise ValueError("soft-sum eps must be >= 0")


@dataclass
class ConstraintVector:
    """Assembled inequality values with parallel row descriptors."""

    values: np.ndarray
    labels: list

    def max_violation(self) -> float:
        if self.values.size == 0:
            return 0.0
        return float(max(0.0, self.values.max()))


def sphere_clearance(a: Sphere, b: Sphere) -> float:
    """Signed surface gap between two spheres; negative means overlap."""
    return float(guarded_norm(a.center - b.center) - (a.radius + b.radius))


def pair_count(sphere_counts) -> int:
    """Number of object-object sphere pair constraints in Absolute mode."""
    counts = list(sphere_counts)
    total = 0
    for i in range(len(counts)):
        for j in range(i + 1, len(counts)):
            total += counts[i] * counts[j]
    return total


def _point_segment(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Distance from point to closed segment and the segment parameter."""
    v = b - a
    vv = float(v @ v)
    if vv < _EPS:
        t = 0.0
    else:
        t = float(np.clip((p - a) @ v / vv, 0.0, 1.0))
    return float(guarded_norm(p - (a + t * v))), t


def segment_sphere_clearance(p0, p1, s: Sphere, tube_radius: float = 0.0) -> float:
    """Gap between a segment (thickened by ``tube_radius``) and a sphere."""
    d, _ = _point_segment(s.center, np.asarray(p0, float), np.asarray(p1, float))
    return d - (s.radius + tube_radius)


def _segment_segment_params(a0, a1, b0, b1) -> tuple[float, float]:
    """Parameters (s, t) of the closest points of two closed segments."""
    d1 = a1 - a0
    d2 = b1 - b0
    r = a0 - b0
    a = float(d1 @ d1)
    e = float(d2 @ d2)
    f = float(d2 @ r)
    if a < _EPS and e < _EPS:
        return 0.0, 0.0
    if a < _EPS:
        return 0.0, float(np.clip(f / e, 0.0, 1.0))
    c = float(d1 @ r)
    if e < _EPS:
        return float(np.clip(-c / a, 0.0, 1.0)), 0.0
    b = float(d1 @ d2)
    denom = a * e - b * b
    s = float(np.clip((b * f - c * e) / denom, 0.0, 1.0)) if denom > _EPS * a * e else 0.0
    t = (b * s + f) / e
    if t < 0.0:
        t = 0.0
        s = float(np.clip(-c / a, 0.0, 1.0))
    elif t > 1.0:
        t = 1.0
        s = float(np.clip((b - c) / a, 0.0, 1.0))
    return s, t


def segment_segment_clearance(a0, a1, b0, b1, tube_a: float = 0.0,
                              tube_b: float = 0.0) -> float:
    """Gap between two segments thickened by their tube radii."""
    a0, a1, b0, b1 = (np.asarray(p, float) for p in (a0, a1, b0, b1))
    s, t = _segment_segment_params(a0, a1, b0, b1)
    d = float(guarded_norm((a0 + s * (a1 - a0)) - (b0 + t * (b1 - b0))))
    return d - (tube_a + tube_b)


def _softplus(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    small = z <= 30.0
    out[small] = np.log1p(np.exp(z[small]))
    out[~small] = z[~small] + np.log1p(np.exp(-z[~small]))
    return out


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class ConstraintSet:
    """Evaluates the full inequality vector and its derivatives.

    The set is frozen at construction: row order is object-object detailed
    blocks (pair-lexicographic), enclosing rows for inactive pairs, then
    route-object and route-route rows.  ``values`` returns the vector,
    ``vjp`` returns sum_k w_k * grad g_k without materializing the Jacobian,
    and ``jacobian`` builds the dense matrix for verification.
    """

    def __init__(self, spec: "ProblemSpec", active_pairs: Optional[set] = None,
                 mode: Optional[ConstraintMode] = None,
                 pair_subset: Optional[list] = None,
                 include_routes: bool = True):
        self.spec = spec
        self.mode = mode if mode is not None else spec.constraint_mode
        bodies = spec.bodies
        n = len(bodies)

        if pair_subset is None:
            all_pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
        else:
            all_pairs = sorted({(min(i, j), max(i, j)) for i, j in pair_subset})
        if active_pairs is None:
            self.detailed_pairs = all_pairs
            self.enclosing_pairs = []
        else:
            active = {tuple(sorted(p)) for p in active_pairs}
            self.detailed_pairs = [p for p in all_pairs if p in active]
            self.enclosing_pairs = [p for p in all_pairs if p not in active]

        self._enc = [b.enclosing_sphere() for b in bodies] if self.enclosing_pairs else None

        # (route, segment) -> per body: sphere indices to test, after
        # exemptions near the attachment ports.
        self.route_targets = []
        routes = spec.routes if include_routes else []
        for r_idx, route in enumerate(routes):
            for seg in range(route.n_segments):
                targets = []
                for b_idx, body in enumerate(bodies):
                    keep = np.ones(body.n_spheres, dtype=bool)
                    if route.exemption == "endpoints":
                        if b_idx in (route.a[0], route.b[0]):
                            keep[:] = False
                    else:
                        for end, (eb, ep) in (("a", route.a), ("b", route.b)):
                            incident = seg == 0 if end == "a" else seg == route.n_segments - 1
                            if incident and b_idx == eb:
                                port = body.ports[ep]
                                near = (
                                    np.linalg.norm(body.centers - port, axis=1)
                                    <= body.radii + 2.0 * route.radius
                                )
                                keep &= ~near
                    if keep.any():
                        targets.append((b_idx, np.nonzero(keep)[0]))
                self.route_targets.append((r_idx, seg, targets))

        # Route-route segment pairs: different routes always; same route only
        # when the segments are not adjacent.
        self.seg_pairs = []
        segs = [
            (r, s) for r, route in enumerate(routes) for s in range(route.n_segments)
        ]
        for u in range(len(segs)):
            for v in range(u + 1, len(segs)):
                (r1, s1), (r2, s2) = segs[u], segs[v]
                if r1 == r2 and abs(s1 - s2) <= 1:
                    continue
                self.seg_pairs.append((r1, s1, r2, s2))

        self.labels = self._build_labels()
        self.n_rows_absolute = len(self.labels)

    def _build_labels(self) -> list:
        labels = []
        bodies = self.spec.bodies
        for (i, j) in self.detailed_pairs:
            for mu in range(bodies[i].n_spheres):
                for nu in range(bodies[j].n_spheres):
                    labels.append(("obj-obj", i, mu, j, nu))
        for (i, j) in self.enclosing_pairs:
            labels.append(("enclosing", i, j))
        for r_idx, seg, targets in self.route_targets:
            for b_idx, sph in targets:
                for k in sph:
                    labels.append(("route-obj", r_idx, seg, b_idx, int(k)))
        for r1, s1, r2, s2 in self.seg_pairs:
            labels.append(("route-route", r1, s1, r2, s2))
        return labels

    # -- absolute rows ------------------------------------------------

    def _absolute_values(self, world: WorldGeometry) -> np.ndarray:
        spec = self.spec
        bodies = spec.bodies
        chunks = []
        for (i, j) in self.detailed_pairs:
            dist = _cross_dist(world.centers[i], world.centers[j])
            rsum = bodies[i].radii[:, None] + bodies[j].radii[None, :]
            chunks.append((rsum - dist).ravel())
        if self.enclosing_pairs:
            centers = np.stack(
                [world.rot[i] @ self._enc[i][0] + world.poses[i, 3:6]
                 for i in range(len(bodies))]
            )
            vals = np.empty(len(self.enclosing_pairs))
            for k, (i, j) in enumerate(self.enclosing_pairs):
                d = float(guarded_norm(centers[i] - centers[j]))
                vals[k] = (self._enc[i][1] + self._enc[j][1]) - d
            chunks.append(vals)
        for r_idx, seg, targets in self.route_targets:
            a = world.route_nodes[r_idx][seg]
            b = world.route_nodes[r_idx][seg + 1]
            tube = spec.routes[r_idx].radius
            v = b - a
            vv = float(v @ v)
            for b_idx, sph in targets:
                c = world.centers[b_idx][sph]
                if vv < _EPS:
                    t = np.zeros(len(sph))
                else:
                    t = np.clip((c - a) @ v / vv, 0.0, 1.0)
                q = a + t[:, None] * v
                dist = guarded_norm(c - q)
                chunks.append(bodies[b_idx].radii[sph] + tube - dist)
        if self.seg_pairs:
            vals = np.empty(len(self.seg_pairs))
            for k, (r1, s1, r2, s2) in enumerate(self.seg_pairs):
                vals[k] = -segment_segment_clearance(
                    world.route_nodes[r1][s1], world.route_nodes[r1][s1 + 1],
                    world.route_nodes[r2][s2], world.route_nodes[r2][s2 + 1],
                    self.spec.routes[r1].radius, self.spec.routes[r2].radius,
                )
            chunks.append(vals)
        if not chunks:
            return np.empty(0)
        return np.concatenate(chunks)

    def _absolute_vjp(self, world: WorldGeometry, w: np.ndarray) -> np.ndarray:
        spec = self.spec
        bodies = spec.bodies
        grad = np.zeros(world.layout.dim)
        off = 0
        for (i, j) in self.detailed_pairs:
            ni, nj = bodies[i].n_spheres, bodies[j].n_spheres
            wm = w[off:off + ni * nj].reshape(ni, nj)
            off += ni * nj
            if not np.any(wm):
                continue
            ci, cj = world.centers[i], world.centers[j]
            coeff = wm / _cross_dist(ci, cj)
            # g = rsum - dist: d g / d center_i = -u, d g / d center_j = +u,
            # with u the unit vector from j-sphere to i-sphere; the weighted
            # sums collapse to matrix products.
            gi = coeff.sum(axis=1)[:, None] * ci - coeff @ cj
            gj = coeff.sum(axis=0)[:, None] * cj - coeff.T @ ci
            world.add_center_gradient(grad, i, -gi)
            world.add_center_gradient(grad, j, -gj)
        for (i, j) in self.enclosing_pairs:
            wk = w[off]
            off += 1
            if wk == 0.0:
                continue
            ci = world.rot[i] @ self._enc[i][0] + world.poses[i, 3:6]
            cj = world.rot[j] @ self._enc[j][0] + world.poses[j, 3:6]
            diff = ci - cj
            u = diff / guarded_norm(diff)
            for body, sgn, c_loc in ((i, -1.0, self._enc[i][0]), (j, 1.0, self._enc[j][0])):
                sl = world.layout.body_slice(body)
                grad[sl.start:sl.start + 3] += wk * sgn * (
                    np.einsum("kab,b->ka", world.drot[body], c_loc) @ u
                )
                grad[sl.start + 3:sl.start + 6] += wk * sgn * u
        for r_idx, seg, targets in self.route_targets:
            a = world.route_nodes[r_idx][seg]
            b = world.route_nodes[r_idx][seg + 1]
            v = b - a
            vv = float(v @ v)
            for b_idx, sph in targets:
                nk = len(sph)
                wk = w[off:off + nk]
                off += nk
                if not np.any(wk):
                    continue
                c = world.centers[b_idx][sph]
                if vv < _EPS:
                    t = np.zeros(nk)
                else:
                    t = np.clip((c - a) @ v / vv, 0.0, 1.0)
                q = a + t[:, None] * v
                diff = c - q
                dist = guarded_norm(diff)
                u = diff / dist[:, None]
                # g = r + tube - dist; Danskin: treat t as locally constant.
                full = np.zeros(bodies[b_idx].n_spheres * 3).reshape(-1, 3)
                full[sph] = -wk[:, None] * u
                world.add_center_gradient(grad, b_idx, full)
                wa = np.einsum("k,k,kc->c", wk, 1.0 - t, u)
                wb = np.einsum("k,k,kc->c", wk, t, u)
                world.add_node_gradient(grad, r_idx, seg, wa)
                world.add_node_gradient(grad, r_idx, seg + 1, wb)
        for (r1, s1, r2, s2) in self.seg_pairs:
            wk = w[off]
            off += 1
            if wk == 0.0:
                continue
            a0 = world.route_nodes[r1][s1]
            a1 = world.route_nodes[r1][s1 + 1]
            b0 = world.route_nodes[r2][s2]
            b1 = world.route_nodes[r2][s2 + 1]
            s, t = _segment_segment_params(a0, a1, b0, b1)
            diff = (a0 + s * (a1 - a0)) - (b0 + t * (b1 - b0))
            u = diff / guarded_norm(diff)
            # g = tubes - dist
            world.add_node_gradient(grad, r1, s1, -wk * (1.0 - s) * u)
            world.add_node_gradient(grad, r1, s1 + 1, -wk * s * u)
            world.add_node_gradient(grad, r2, s2, wk * (1.0 - t) * u)
            world.add_node_gradient(grad, r2, s2 + 1, wk * t * u)
        return grad

    # -- public API ----------------------------------------------------

    def _kind_slices(self) -> list[tuple[str, slice]]:
        out = []
        start = 0
        for kind_name, count in (
            ("obj-obj", sum(self.spec.bodies[i].n_spheres * self.spec.bodies[j].n_spheres
                            for (i, j) in self.detailed_pairs)),
            ("enclosing", len(self.enclosing_pairs)),
            ("route-obj", sum(len(s) for _, _, t in self.route_targets for _, s in t)),
            ("route-route", len(self.seg_pairs)),
        ):
            if count:
                out.append((kind_name, slice(start, start + count)))
            start += count
        return out

    def values(self, world: WorldGeometry) -> np.ndarray:
        g = self._absolute_values(world)
        if self.mode.kind == "absolute":
            return g
        rows = []
        for _, sl in self._kind_slices():
            z = self.mode.beta * g[sl]
            rows.append(_softplus(z).sum() / self.mode.beta - self.mode.eps)
        return np.asarray(rows)

    def vjp(self, world: WorldGeometry, w: np.ndarray) -> np.ndarray:
        if self.mode.kind == "absolute":
            return self._absolute_vjp(world, np.asarray(w, float))
        g = self._absolute_values(world)
        w_abs = np.zeros_like(g)
        for (_, sl), wk in zip(self._kind_slices(), w):
            w_abs[sl] = wk * _sigmoid(self.mode.beta * g[sl])
        return self._absolute_vjp(world, w_abs)

    def jacobian(self, world: WorldGeometry) -> np.ndarray:
        n = len(self.values(world))
        jac = np.empty((n, world.layout.dim))
        for k in range(n):
            e = np.zeros(n)
            e[k] = 1.0
            jac[k] = self.vjp(world, e)
        return jac

    def assembled_labels(self) -> list:
        if self.mode.kind == "absolute":
            return list(self.labels)
        return [(kind, "soft-sum") for kind, _ in self._kind_slices()]


def assemble(x: np.ndarray, spec: "ProblemSpec", active_pairs: Optional[set] = None,
             mode: Optional[ConstraintMode] = None) -> ConstraintVector:
    """Build the inequality vector g(x) <= 0 for a design vector."""
    cs = ConstraintSet(spec, active_pairs=active_pairs, mode=mode)
    world = spec.world(x)
    return ConstraintVector(values=cs.values(world), labels=cs.assembled_labels())


def full_violation(spec: "ProblemSpec", x: np.ndarray) -> float:
    """Worst violation of the complete Absolute constraint set."""
    cs = ConstraintSet(spec, active_pairs=None, mode=ConstraintMode("absolute"))
    return ConstraintVector(cs.values(spec.world(x)), cs.labels).max_violation()
