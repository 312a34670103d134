"""Full-frame rendering: determinism, exact cases, and statistical invariants."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gtlab.render.imageio import ppm_bytes
from gtlab.render.presets import cornell_box, emissive_wall
from gtlab.render.scene import Camera, Material, RenderConfig, Scene, Sphere
from gtlab.render.tracer import FrameTime, measure_frame_time, render
from gtlab.scale import CpuDescriptor


def test_emitter_scene_renders_emission_exactly():
    scene, camera = emissive_wall(emission=(2.0, 2.0, 2.0), resolution=(8, 8))
    result = render(scene, camera, RenderConfig(samples_per_pixel=5, max_path_depth=3))
    assert np.array_equal(result.image.pixels, np.full((8, 8, 3), 2.0))


def test_worker_count_does_not_change_pixels():
    scene, camera = cornell_box(resolution=(24, 24))
    cfg = RenderConfig(samples_per_pixel=8, max_path_depth=4, rng_seed=77)
    serial = render(scene, camera, cfg, workers=1)
    parallel = render(scene, camera, cfg, workers=2)
    assert np.array_equal(serial.image.pixels, parallel.image.pixels)
    assert ppm_bytes(serial.image) == ppm_bytes(parallel.image)


def test_same_config_same_bytes():
    scene, camera = cornell_box(resolution=(16, 16))
    cfg = RenderConfig(samples_per_pixel=4, max_path_depth=3, rng_seed=9)
    a = render(scene, camera, cfg)
    b = render(scene, camera, cfg)
    assert np.array_equal(a.image.pixels, b.image.pixels)


def test_different_seed_changes_pixels():
    scene, camera = cornell_box(resolution=(16, 16))
    a = render(scene, camera, RenderConfig(4, 3, rng_seed=1))
    b = render(scene, camera, RenderConfig(4, 3, rng_seed=2))
    assert not np.array_equal(a.image.pixels, b.image.pixels)


def test_zero_resolution_rejected():
    scene, camera = cornell_box()
    camera.resolution = (0, 16)
    with pytest.raises(ValueError, match="resolution"):
        render(scene, camera, RenderConfig(1, 1))


def test_wall_seconds_positive():
    scene, camera = cornell_box(resolution=(8, 8))
    result = render(scene, camera, RenderConfig(2, 2))
    assert result.wall_seconds > 0


@settings(max_examples=10, deadline=None)
@given(
    seed=st.integers(0, 2**32),
    albedo=st.tuples(*[st.floats(0, 1) for _ in range(3)]),
    emission=st.floats(0, 5),
    env=st.floats(0, 3),
)
def test_rendered_channels_nonnegative_and_finite(seed, albedo, emission, env):
    scene = Scene(
        primitives=(
            Sphere(center=(0.3, -0.2, -2.5), radius=1.0, material=0),
            Sphere(center=(-0.5, 0.4, -4.0), radius=1.2, material=1),
        ),
        materials=(
            Material(albedo=albedo, emission=(emission, emission, emission)),
            Material(albedo=(0.9, 0.1, 0.5)),
        ),
        environment_radiance=(env, env * 0.5, env * 0.25),
    )
    camera = Camera(
        position=(0, 0, 0),
        forward=(0, 0, -1),
        up=(0, 1, 0),
        vfov_radians=1.0,
        resolution=(6, 6),
    )
    result = render(scene, camera, RenderConfig(4, 4, rng_seed=seed))
    assert np.all(np.isfinite(result.image.pixels))
    assert np.all(result.image.pixels >= 0.0)
    # Image validation enforces the same contract; NaN would have raised.


def test_energy_conservation_against_environment():
    # No emitters anywhere: expected pixel values cannot exceed the brightest
    # environment channel.  Allow 3 standard errors of sampling noise.
    env = (0.8, 0.6, 0.4)
    scene = Scene(
        primitives=(
            Sphere(center=(0, 0, -3), radius=1.0, material=0),
            Sphere(center=(1.2, 0.5, -4), radius=0.8, material=1),
        ),
        materials=(
            Material(albedo=(1.0, 1.0, 1.0)),
            Material(albedo=(0.7, 0.9, 0.2)),
        ),
        environment_radiance=env,
    )
    camera = Camera(
        position=(0, 0, 0), forward=(0, 0, -1), up=(0, 1, 0),
        vfov_radians=1.1, resolution=(12, 12),
    )
    n = 256
    result = render(scene, camera, RenderConfig(n, 16, rng_seed=21))
    bound = max(env)
    # Per-pixel estimates in [0, bound]; the sample-mean standard error is at
    # most bound/(2 sqrt(n)).
    se = bound / (2.0 * math.sqrt(n))
    assert float(result.image.pixels.max()) <= bound + 3.0 * se


def test_rmse_halves_when_samples_quadruple():
    # Monte Carlo 1/sqrt(N): RMSE(N=4) / RMSE(N=16) against a high-N
    # reference should sit near 2.
    scene, camera = cornell_box(resolution=(32, 32))
    ref = render(scene, camera, RenderConfig(1024, 4, rng_seed=1000)).image.pixels
    rmse = {}
    for n in (4, 16):
        img = render(scene, camera, RenderConfig(n, 4, rng_seed=5)).image.pixels
        rmse[n] = math.sqrt(float(((img - ref) ** 2).mean()))
    ratio = rmse[4] / rmse[16]
    assert 1.6 <= ratio <= 2.4  # 2 +- 20%


def test_measure_frame_time_median(monkeypatch):
    times = iter([1.0, 9.0, 2.0])

    def fake_render(scene, camera, config, workers=1):
        assert workers == 1
        return type("R", (), {"wall_seconds": next(times)})()

    import gtlab.render.tracer as tracer

    monkeypatch.setattr(tracer, "render", fake_render)
    cpu = CpuDescriptor("test", 2.0, 4.0)
    ft = measure_frame_time(None, None, None, repetitions=3, reference=cpu)
    assert ft.seconds_per_frame == 2.0
    assert ft.samples == (1.0, 9.0, 2.0)
    assert ft.reference is cpu


def test_measure_frame_time_single_repetition(monkeypatch):
    import gtlab.render.tracer as tracer

    monkeypatch.setattr(
        tracer, "render",
        lambda *a, **k: type("R", (), {"wall_seconds": 3.25})(),
    )
    ft = measure_frame_time(None, None, None, 1, reference=CpuDescriptor("t", 1, 1))
    assert ft.seconds_per_frame == 3.25


def test_measure_frame_time_real_and_stable():
    scene, camera = cornell_box(resolution=(16, 16))
    cfg = RenderConfig(16, 3, rng_seed=0)
    cpu = CpuDescriptor("local", 2.0, 4.0)
    a = measure_frame_time(scene, camera, cfg, 1, reference=cpu)
    b = measure_frame_time(scene, camera, cfg, 1, reference=cpu)
    assert a.seconds_per_frame > 0 and math.isfinite(a.seconds_per_frame)
    # Self-measurement on shared hardware: generous +-50% stability check.
    assert 0.5 <= a.seconds_per_frame / b.seconds_per_frame <= 2.0


def test_measure_frame_time_rejects_zero_repetitions():
    with pytest.raises(ValueError, match="repetitions"):
        measure_frame_time(None, None, None, 0, reference=CpuDescriptor("t", 1, 1))


def test_frame_time_is_dataclass_with_reference():
    assert FrameTime(1.0, CpuDescriptor("x", 1, 1), (1.0,)).reference.name == "x"
