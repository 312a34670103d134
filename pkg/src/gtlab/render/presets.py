"""Built-in scenes: the Cornell-style box plus closed-form calibration rigs.

The furnace rigs are constructed so their expected pixel values are known
exactly, which makes them renderer oracles:

* ``furnace_box`` -- five unit-albedo walls open to a unit environment.
  Every path keeps throughput (1,1,1) until it escapes and picks up exactly
  1.0; truncation at depth D loses only paths that survive D bounces inside
  a wide shallow box, a vanishing fraction.
* ``white_sphere`` -- a unit-albedo sphere seen from outside in a unit
  environment.  A bounced ray cannot re-hit a convex body, so every estimate
  is exactly 1.0 after one bounce.
* ``gray_furnace`` -- a closed sphere viewed from inside whose walls both
  reflect and emit ``rho`` per channel.  Every hit adds ``rho`` times the
  accumulated throughput, so a depth-D estimate is exactly
  ``sum(rho**k for k in 1..D)`` -> ``rho / (1 - rho)`` (1.0 at rho = 0.5).
"""

from __future__ import annotations

import math

from .scene import Camera, Material, Scene, Sphere, Triangle, Vec3


def _quad(a: Vec3, b: Vec3, c: Vec3, d: Vec3, material: int) -> list[Triangle]:
    return [
        Triangle(vertices=(a, b, c), material=material),
        Triangle(vertices=(a, c, d), material=material),
    ]


def cornell_box(resolution: tuple[int, int] = (64, 64)) -> tuple[Scene, Camera]:
    """Colored box, area light near the ceiling, one matte sphere."""
    white = Material(albedo=(0.73, 0.73, 0.73), name="white")
    red = Material(albedo=(0.65, 0.05, 0.05), name="red")
    green = Material(albedo=(0.12, 0.45, 0.15), name="green")
    light = Material(albedo=(0.0, 0.0, 0.0), emission=(14.0, 14.0, 14.0), name="light")
    gray = Material(albedo=(0.75, 0.75, 0.75), name="gray")
    materials = (white, red, green, light, gray)

    prims: list = []
    # interior x,y in [-1,1], z in [-2,0]; open toward the camera at +z
    prims += _quad((-1, -1, -2), (1, -1, -2), (1, 1, -2), (-1, 1, -2), 0)  # back
    prims += _quad((-1, -1, 0), (1, -1, 0), (1, -1, -2), (-1, -1, -2), 0)  # floor
    prims += _quad((-1, 1, -2), (1, 1, -2), (1, 1, 0), (-1, 1, 0), 0)      # ceiling
    prims += _quad((-1, -1, 0), (-1, -1, -2), (-1, 1, -2), (-1, 1, 0), 1)  # left
    prims += _quad((1, -1, -2), (1, -1, 0), (1, 1, 0), (1, 1, -2), 2)      # right
    prims += _quad(
        (-0.4, 0.98, -1.4), (0.4, 0.98, -1.4), (0.4, 0.98, -0.6), (-0.4, 0.98, -0.6), 3
    )
    prims.append(Sphere(center=(-0.42, -0.62, -1.35), radius=0.38, material=4))

    scene = Scene(
        primitives=tuple(prims),
        materials=materials,
        environment_radiance=(0.0, 0.0, 0.0),
    )
    camera = Camera(
        position=(0.0, 0.0, 2.2),
        forward=(0.0, 0.0, -1.0),
        up=(0.0, 1.0, 0.0),
        vfov_radians=2.0 * math.atan(0.95 / 2.2),
        resolution=resolution,
    )
    return scene, camera


def furnace_box(resolution: tuple[int, int] = (32, 32)) -> tuple[Scene, Camera]:
    """Unit-albedo enclosure open to a unit environment (see module docstring)."""
    mirror_white = Material(albedo=(1.0, 1.0, 1.0), name="unit-albedo")
    prims: list = []
    # interior x,y in [-2,2], z in [-1,0]; the entire z=0 face is open
    prims += _quad((-2, -2, -1), (2, -2, -1), (2, 2, -1), (-2, 2, -1), 0)  # back
    prims += _quad((-2, -2, 0), (2, -2, 0), (2, -2, -1), (-2, -2, -1), 0)  # floor
    prims += _quad((-2, 2, -1), (2, 2, -1), (2, 2, 0), (-2, 2, 0), 0)      # ceiling
    prims += _quad((-2, -2, 0), (-2, -2, -1), (-2, 2, -1), (-2, 2, 0), 0)  # left
    prims += _quad((2, -2, -1), (2, -2, 0), (2, 2, 0), (2, 2, -1), 0)      # right
    scene = Scene(
        primitives=tuple(prims),
        materials=(mirror_white,),
        environment_radiance=(1.0, 1.0, 1.0),
    )
    camera = Camera(
        position=(0.0, 0.0, 0.9),
        forward=(0.0, 0.0, -1.0),
        up=(0.0, 1.0, 0.0),
        vfov_radians=math.radians(70.0),
        resolution=resolution,
    )
    return scene, camera


def white_sphere(resolution: tuple[int, int] = (8, 8)) -> tuple[Scene, Camera]:
    """Unit-albedo sphere from outside, unit environment: estimates are exactly 1."""
    scene = Scene(
        primitives=(Sphere(center=(0.0, 0.0, -3.0), radius=1.0, material=0),),
        materials=(Material(albedo=(1.0, 1.0, 1.0), name="unit-albedo"),),
        environment_radiance=(1.0, 1.0, 1.0),
    )
    camera = Camera(
        position=(0.0, 0.0, 0.0),
        forward=(0.0, 0.0, -1.0),
        up=(0.0, 1.0, 0.0),
        vfov_radians=math.radians(30.0),
        resolution=resolution,
    )
    return scene, camera


def gray_furnace(
    rho: float = 0.5, resolution: tuple[int, int] = (8, 8)
) -> tuple[Scene, Camera]:
    """Closed sphere seen from inside; walls reflect and emit ``rho``.

    Depth-D estimates equal ``sum(rho**k for k in 1..D)`` exactly, with zero
    variance (every bounce re-hits the sphere and picks up the same emission).
    """
    scene = Scene(
        primitives=(Sphere(center=(0.0, 0.0, 0.0), radius=2.0, material=0),),
        materials=(
            Material(albedo=(rho, rho, rho), emission=(rho, rho, rho), name="gray"),
        ),
        environment_radiance=(1.0, 1.0, 1.0),
    )
    camera = Camera(
        position=(0.0, 0.0, 0.0),
        forward=(0.0, 0.0, -1.0),
        up=(0.0, 1.0, 0.0),
        vfov_radians=math.radians(60.0),
        resolution=resolution,
    )
    return scene, camera


def emissive_wall(
    emission: Vec3 = (2.0, 2.0, 2.0), resolution: tuple[int, int] = (16, 16)
) -> tuple[Scene, Camera]:
    """Camera staring at a pure emitter; every covered pixel equals ``emission``."""
    emitter = Material(albedo=(0.0, 0.0, 0.0), emission=emission, name="emitter")
    prims = _quad((-4, -4, -2), (4, -4, -2), (4, 4, -2), (-4, 4, -2), 0)
    scene = Scene(
        primitives=tuple(prims),
        materials=(emitter,),
        environment_radiance=(0.0, 0.0, 0.0),
    )
    camera = Camera(
        position=(0.0, 0.0, 0.0),
        forward=(0.0, 0.0, -1.0),
        up=(0.0, 1.0, 0.0),
        vfov_radians=math.radians(30.0),
        resolution=resolution,
    )
    return scene, camera


PRESETS = {
    "cornell": cornell_box,
    "furnace-box": furnace_box,
    "white-sphere": white_sphere,
    "gray-furnace": gray_furnace,
    "emitter": emissive_wall,
}


def preset(name: str, resolution: tuple[int, int] | None = None) -> tuple[Scene, Camera]:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; available: {sorted(PRESETS)}")
    if resolution is None:
        return PRESETS[name]()
    return PRESETS[name](resolution=resolution)
