"""Radiance estimator against closed-form furnace oracles."""

import numpy as np
import pytest

from gtlab.render.presets import gray_furnace, white_sphere
from gtlab.render.scene import Material, RenderConfig, Scene
from gtlab.render.tracer import estimate_radiance, render


def seeded_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed))


def geometric_series_oracle(rho: float, depth: int) -> float:
    """Expected gray-furnace radiance: sum of rho^k for k = 1..depth."""
    return sum(rho**k for k in range(1, depth + 1))


def test_miss_returns_environment_exactly():
    scene = Scene(primitives=(), materials=(), environment_radiance=(0.5, 0.25, 0.125))
    v = estimate_radiance(
        scene, (0, 0, 0), (0, 0, -1.0), RenderConfig(1, 1, 0), seeded_rng(0)
    )
    assert np.array_equal(v, np.array([0.5, 0.25, 0.125]))


def test_white_sphere_estimates_are_exactly_one():
    # Convex unit-albedo body in a unit environment: one bounce, then escape,
    # so every single-sample estimate is exactly (1, 1, 1).
    scene, _ = white_sphere()
    cfg = RenderConfig(samples_per_pixel=1, max_path_depth=32, rng_seed=0)
    for seed in range(200):
        v = estimate_radiance(scene, (0, 0, 0), (0, 0, -1.0), cfg, seeded_rng(seed))
        assert np.array_equal(v, np.ones(3)), f"seed {seed}: {v}"


def test_white_sphere_mean_within_one_percent():
    scene, camera = white_sphere(resolution=(1, 1))
    result = render(scene, camera, RenderConfig(1024, 32, rng_seed=3))
    assert np.all(np.abs(result.image.pixels - 1.0) < 0.01)


def test_gray_furnace_matches_geometric_series_oracle():
    scene, _ = gray_furnace(rho=0.5)
    depth = 16
    expected = geometric_series_oracle(0.5, depth)
    assert expected == pytest.approx(0.9999847412109375, abs=0)  # powers of 2: exact
    cfg = RenderConfig(samples_per_pixel=1, max_path_depth=depth, rng_seed=0)
    for seed in range(200):
        v = estimate_radiance(scene, (0, 0, 0), (0, 0, -1.0), cfg, seeded_rng(seed))
        assert np.allclose(v, expected, rtol=0, atol=1e-12), f"seed {seed}: {v}"


def test_gray_furnace_sample_mean_within_one_percent():
    scene, camera = gray_furnace(rho=0.5, resolution=(1, 1))
    result = render(scene, camera, RenderConfig(4096, 16, rng_seed=5))
    expected = geometric_series_oracle(0.5, 16)
    assert np.all(np.abs(result.image.pixels - expected) / expected < 0.01)


@pytest.mark.parametrize("depth", [1, 2, 4, 8])
def test_gray_furnace_depth_truncation_follows_series(depth):
    scene, _ = gray_furnace(rho=0.5)
    expected = geometric_series_oracle(0.5, depth)
    cfg = RenderConfig(samples_per_pixel=1, max_path_depth=depth, rng_seed=0)
    v = estimate_radiance(scene, (0, 0, 0), (0, 0, -1.0), cfg, seeded_rng(42))
    assert np.allclose(v, expected, rtol=0, atol=1e-12)


def test_dark_scene_estimates_zero():
    scene = Scene(
        primitives=white_sphere()[0].primitives,
        materials=(Material(albedo=(0.8, 0.8, 0.8)),),
        environment_radiance=(0.0, 0.0, 0.0),
    )
    cfg = RenderConfig(samples_per_pixel=1, max_path_depth=8, rng_seed=0)
    v = estimate_radiance(scene, (0, 0, 0), (0, 0, -1.0), cfg, seeded_rng(1))
    assert np.array_equal(v, np.zeros(3))


def test_unnormalized_direction_rejected():
    scene, _ = white_sphere()
    cfg = RenderConfig(1, 1, 0)
    with pytest.raises(ValueError, match="normalized"):
        estimate_radiance(scene, (0, 0, 0), (0, 0, -3.0), cfg, seeded_rng(0))
