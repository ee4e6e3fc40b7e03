import math

import numpy as np
import pytest

from spatialpack.benchmarks import (
    gen_cuboid_benchmark,
    gen_lshape_benchmark,
    gen_unique_benchmark,
)
from spatialpack.geometry import Body, Route
from spatialpack.objectives import (
    ObjectiveWeights,
    exact_aabb_volume,
    mean_pairwise_distance,
    preset_weights,
    routing_exponential,
    routing_length_linear,
    routing_length_sq,
    smooth_aabb_volume,
    total_objective,
)
from spatialpack.problem import DomainBounds, ProblemSpec


def _route_spec(segment_targets):
    """Bodies with one port each placed so the route nodes hit the targets."""
    bodies = []
    for i, p in enumerate(segment_targets):
        bodies.append(Body(id=f"b{i}", centers=[[0, 0, 0]], radii=[0.01],
                           ports=np.array([[0.0, 0.0, 0.0]])))
    routes = [Route(id=f"r{i}", a=(i, 0), b=(i + 1, 0))
              for i in range(len(segment_targets) - 1)]
    spec = ProblemSpec(name="routes", bodies=bodies, routes=routes,
                       weights=ObjectiveWeights(routing=1.0), bounds=DomainBounds())
    x = np.zeros(spec.dim)
    for i, p in enumerate(segment_targets):
        x[6 * i + 3:6 * i + 6] = p
    return spec, x


class TestRoutingLength:
    def test_one_segment_of_length_two(self):
        spec, x = _route_spec([[0, 0, 0], [2, 0, 0]])
        world = spec.world(x)
        assert routing_length_sq(world)[0] == pytest.approx(4.0)
        assert routing_length_linear(world) == pytest.approx(2.0)

    def test_two_unit_segments(self):
        spec, x = _route_spec([[0, 0, 0], [1, 0, 0], [1, 1, 0]])
        world = spec.world(x)
        assert routing_length_sq(world)[0] == pytest.approx(2.0)
        assert routing_length_linear(world) == pytest.approx(2.0)

    def test_cuboid_certificate_routing(self):
        spec = gen_cuboid_benchmark(2, 6)
        world = spec.world(spec.certificate)
        assert routing_length_sq(world)[0] == pytest.approx(2.0, abs=1e-12)
        assert routing_length_linear(world) == pytest.approx(2.0, abs=1e-12)

    def test_lshape_certificate_routing(self):
        spec = gen_lshape_benchmark(2, 6)
        assert routing_length_linear(spec.world(spec.certificate)) == pytest.approx(
            2.0, abs=1e-12)

    def test_unique_certificate_routing(self):
        spec = gen_unique_benchmark(6)
        assert routing_length_linear(spec.world(spec.certificate)) == pytest.approx(
            5.0, abs=1e-12)


class TestRoutingExponential:
    def test_zero_length_segments(self):
        spec, x = _route_spec([[0, 0, 0], [0, 0, 0]])
        assert routing_exponential(spec.world(x), 1.0)[0] == pytest.approx(0.0)

    def test_unit_segment(self):
        spec, x = _route_spec([[0, 0, 0], [1, 0, 0]])
        assert routing_exponential(spec.world(x), 1.0)[0] == pytest.approx(
            math.e - 1.0, abs=1e-12)

    def test_taylor_limit_for_small_lengths(self):
        eps = 1e-3
        spec, x = _route_spec([[0, 0, 0], [eps, 0, 0]])
        world = spec.world(x)
        quad = routing_length_sq(world)[0]
        expo = routing_exponential(world, 1.0)[0]
        assert expo == pytest.approx(quad, rel=1e-5)

    def test_overflow_capped(self):
        spec, x = _route_spec([[0, 0, 0], [100, 0, 0]])
        value = routing_exponential(spec.world(x), 1.0)[0]
        assert np.isfinite(value)
        assert value == pytest.approx(math.exp(60.0) - 1.0)


class TestVolume:
    def test_single_sphere_exact(self):
        body = Body(id="b", centers=[[0, 0, 0]], radii=[0.5], ports=np.zeros((0, 3)))
        spec = ProblemSpec(name="one", bodies=[body], weights=ObjectiveWeights(),
                           bounds=DomainBounds())
        world = spec.world(np.zeros(6))
        assert smooth_aabb_volume(world, 50.0)[0] == pytest.approx(1.0, abs=1e-12)
        assert exact_aabb_volume(world) == pytest.approx(1.0, abs=1e-15)

    def test_two_spheres_against_exact_oracle(self):
        bodies = [Body(id=f"b{i}", centers=[[0, 0, 0]], radii=[0.5],
                       ports=np.zeros((0, 3))) for i in range(2)]
        spec = ProblemSpec(name="two", bodies=bodies, weights=ObjectiveWeights(),
                           bounds=DomainBounds())
        x = np.zeros(12)
        x[9] = 1.0
        world = spec.world(x)
        assert exact_aabb_volume(world) == pytest.approx(2.0, abs=1e-12)
        assert smooth_aabb_volume(world, 50.0)[0] == pytest.approx(2.0, abs=1e-3)

    def test_boltzmann_never_exceeds_exact(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            n = rng.integers(2, 8)
            bodies = [Body(id=f"b{i}", centers=[[0, 0, 0]],
                           radii=[float(rng.uniform(0.1, 0.5))],
                           ports=np.zeros((0, 3))) for i in range(n)]
            spec = ProblemSpec(name="n", bodies=bodies, weights=ObjectiveWeights(),
                               bounds=DomainBounds())
            x = np.zeros(6 * n)
            for i in range(n):
                x[6 * i + 3:6 * i + 6] = rng.normal(scale=2, size=3)
            world = spec.world(x)
            alpha = float(rng.uniform(5, 100))
            assert smooth_aabb_volume(world, alpha)[0] <= exact_aabb_volume(world) + 1e-12

    def test_smooth_converges_monotonically_to_exact(self):
        spec = gen_cuboid_benchmark(2, 8)
        world = spec.world(spec.certificate)
        exact = exact_aabb_volume(world)
        gaps = [abs(smooth_aabb_volume(world, a)[0] - exact) for a in (10.0, 50.0, 200.0)]
        assert gaps[0] >= gaps[1] >= gaps[2]

    def test_certificate_volumes(self):
        assert exact_aabb_volume(
            gen_cuboid_benchmark(2, 10).world(gen_cuboid_benchmark(2, 10).certificate)
        ) == pytest.approx(4.0, abs=1e-9)
        spec = gen_lshape_benchmark(4, 10)
        assert exact_aabb_volume(spec.world(spec.certificate)) == pytest.approx(
            12.0, abs=1e-9)
        spec = gen_unique_benchmark(10)
        assert exact_aabb_volume(spec.world(spec.certificate)) == pytest.approx(
            12.0, abs=1e-9)


class TestMeanDistance:
    def test_two_spheres_five_apart(self):
        bodies = [Body(id=f"b{i}", centers=[[0, 0, 0]], radii=[0.5],
                       ports=np.zeros((0, 3))) for i in range(2)]
        spec = ProblemSpec(name="md", bodies=bodies, weights=ObjectiveWeights(),
                           bounds=DomainBounds())
        x = np.zeros(12)
        x[9] = 5.0
        assert mean_pairwise_distance(spec.world(x))[0] == pytest.approx(5.0, abs=1e-8)

    def test_pair_normalization_count(self):
        # bodies with 2 and 3 spheres: six inter-object pairs
        b0 = Body(id="a", centers=[[0, 0, 0], [1.2, 0, 0]], radii=[0.5, 0.5],
                  ports=np.zeros((0, 3)))
        b1 = Body(id="b", centers=[[0, 0, 0], [1.2, 0, 0], [2.4, 0, 0]],
                  radii=[0.5, 0.5, 0.5], ports=np.zeros((0, 3)))
        spec = ProblemSpec(name="md", bodies=[b0, b1], weights=ObjectiveWeights(),
                           bounds=DomainBounds())
        x = np.zeros(12)
        x[9:12] = [0, 10, 0]
        world = spec.world(x)
        dists = [np.linalg.norm(pa - pb)
                 for pa in world.centers[0] for pb in world.centers[1]]
        assert len(dists) == 6
        assert mean_pairwise_distance(world)[0] == pytest.approx(
            float(np.mean(dists)), abs=1e-9)

    def test_random_against_triple_loop(self):
        rng = np.random.default_rng(1)
        bodies = []
        for i in range(3):
            k = int(rng.integers(1, 4))
            centers = np.zeros((k, 3))
            centers[:, 0] = np.arange(k) * 1.5
            bodies.append(Body(id=f"b{i}", centers=centers, radii=[0.5] * k,
                               ports=np.zeros((0, 3))))
        spec = ProblemSpec(name="md", bodies=bodies, weights=ObjectiveWeights(),
                           bounds=DomainBounds())
        x = rng.normal(scale=3, size=spec.dim)
        world = spec.world(x)
        total, count = 0.0, 0
        for i in range(3):
            for j in range(i + 1, 3):
                for pa in world.centers[i]:
                    for pb in world.centers[j]:
                        total += np.linalg.norm(pa - pb)
                        count += 1
        assert mean_pairwise_distance(world)[0] == pytest.approx(total / count,
                                                                 rel=1e-9)

    def test_single_body_rejected(self):
        body = Body(id="b", centers=[[0, 0, 0]], radii=[0.5], ports=np.zeros((0, 3)))
        spec = ProblemSpec(name="md", bodies=[body], weights=ObjectiveWeights(),
                           bounds=DomainBounds())
        with pytest.raises(ValueError):
            mean_pairwise_distance(spec.world(np.zeros(6)))


class TestTotalObjective:
    def test_zero_weights_zero_value(self):
        spec = gen_cuboid_benchmark(2, 6)
        spec.weights = ObjectiveWeights()
        value, grad, _ = total_objective(spec.certificate, spec)
        assert value == 0.0
        assert np.allclose(grad, 0.0)

    def test_routing_only_matches_quadratic(self):
        spec = gen_cuboid_benchmark(2, 6)
        spec.weights = ObjectiveWeights(routing=1.0)
        value, _, _ = total_objective(spec.certificate, spec)
        assert value == pytest.approx(
            routing_length_sq(spec.world(spec.certificate))[0], abs=1e-14)

    def test_breakdown_sums_exactly(self):
        spec = gen_unique_benchmark(6)
        w = ObjectiveWeights(routing=0.7, volume=1.3, cog=0.4, inertia=0.2,
                             mean_distance=0.1)
        spec.weights = w
        weight_of = {"routing": w.routing, "volume": w.volume, "cog": w.cog,
                     "inertia": w.inertia, "mean_distance": w.mean_distance,
                     "boundary": w.boundary}
        rng = np.random.default_rng(2)
        for _ in range(10):
            x = rng.uniform(-2, 2, spec.dim)
            value, _, br = total_objective(x, spec)
            total = 0.0
            for term, raw in br.items():   # accumulate in breakdown order
                total += weight_of[term] * raw
            assert value == total

    def test_translation_invariance(self):
        spec = gen_cuboid_benchmark(2, 8)
        spec.weights = ObjectiveWeights(routing=1.0, volume=1.0, mean_distance=1.0)
        rng = np.random.default_rng(3)
        x = spec.certificate.copy()
        _, _, base = total_objective(x, spec)
        for _ in range(5):
            shift = rng.normal(size=3)
            x2 = x.copy()
            for i in range(2):
                x2[6 * i + 3:6 * i + 6] += shift
            _, _, moved = total_objective(x2, spec)
            for key in ("routing", "volume", "mean_distance"):
                assert moved[key] == pytest.approx(base[key], abs=1e-9)

    def test_presets(self):
        w = preset_weights("f1")
        assert w.routing_variant == "quadratic"
        assert w.volume == 1.0 and w.routing == 1.0
        assert preset_weights("f2").routing_variant == "exponential"
        assert preset_weights("f3").routing_variant == "quadratic"
        assert preset_weights("f4").routing_variant == "exponential"
        with pytest.raises(ValueError):
            preset_weights("f9")
