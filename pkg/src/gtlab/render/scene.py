"""Scene description: primitives, materials, camera, and the scene file format.

Geometry lives in meters; radiance and reflectance are linear RGB triples.
Materials are Lambertian (albedo) plus isotropic emission, which keeps every
bounce's importance weight equal to the albedo and makes closed-form checks
of the renderer possible.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SCENE_FORMAT_VERSION = 1

Vec3 = tuple[float, float, float]


def _as_vec3(value, what: str) -> Vec3:
    v = tuple(float(x) for x in value)
    if len(v) != 3:
        raise ValueError(f"{what} must have 3 components, got {len(v)}")
    if not all(math.isfinite(x) for x in v):
        raise ValueError(f"{what} must be finite, got {v}")
    return v


@dataclass(frozen=True)
class Material:
    """Lambertian reflectance plus emission, per RGB channel."""

    albedo: Vec3
    emission: Vec3 = (0.0, 0.0, 0.0)
    name: str = ""

    def __post_init__(self) -> None:
        albedo = _as_vec3(self.albedo, "albedo")
        emission = _as_vec3(self.emission, "emission")
        if any(not (0.0 <= a <= 1.0) for a in albedo):
            raise ValueError(f"albedo channels must be in [0, 1], got {albedo}")
        if any(e < 0.0 for e in emission):
            raise ValueError(f"emission channels must be >= 0, got {emission}")
        object.__setattr__(self, "albedo", albedo)
        object.__setattr__(self, "emission", emission)


@dataclass(frozen=True)
class Sphere:
    center: Vec3
    radius: float
    material: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", _as_vec3(self.center, "sphere center"))
        if not (self.radius > 0):
            raise ValueError(f"sphere radius must be > 0, got {self.radius}")


@dataclass(frozen=True)
class Triangle:
    vertices: tuple[Vec3, Vec3, Vec3]
    material: int

    def __post_init__(self) -> None:
        verts = tuple(_as_vec3(v, "triangle vertex") for v in self.vertices)
        if len(verts) != 3:
            raise ValueError("triangle needs exactly 3 vertices")
        a, b, c = (np.asarray(v) for v in verts)
        area2 = np.linalg.norm(np.cross(b - a, c - a))
        if area2 <= 1e-12:
            raise ValueError(f"triangle vertices are collinear: {verts}")
        object.__setattr__(self, "vertices", verts)


@dataclass(frozen=True)
class Scene:
    """Primitives bound to materials, inside an environment of constant radiance.

    Rays that leave the geometry pick up ``environment_radiance``.
    """

    primitives: tuple
    materials: tuple[Material, ...]
    environment_radiance: Vec3 = (0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "primitives", tuple(self.primitives))
        object.__setattr__(self, "materials", tuple(self.materials))
        env = _as_vec3(self.environment_radiance, "environment_radiance")
        if any(e < 0.0 for e in env):
            raise ValueError(f"environment_radiance must be >= 0, got {env}")
        object.__setattr__(self, "environment_radiance", env)
        for prim in self.primitives:
            if not isinstance(prim, (Sphere, Triangle)):
                raise ValueError(f"unsupported primitive {type(prim).__name__}")
            if not (0 <= prim.material < len(self.materials)):
                raise ValueError(
                    f"material id {prim.material} does not resolve "
                    f"({len(self.materials)} materials)"
                )


@dataclass
class Camera:
    """Pinhole camera; ``forward`` and ``up`` are orthonormalized at render time."""

    position: Vec3
    forward: Vec3
    up: Vec3
    vfov_radians: float
    resolution: tuple[int, int]

    def __post_init__(self) -> None:
        self.position = _as_vec3(self.position, "camera position")
        self.forward = _as_vec3(self.forward, "camera forward")
        self.up = _as_vec3(self.up, "camera up")
        self.validate()

    def validate(self) -> None:
        if not (0.0 < self.vfov_radians < math.pi):
            raise ValueError(
                f"vertical fov must be in (0, pi), got {self.vfov_radians}"
            )
        w, h = self.resolution
        if int(w) < 1 or int(h) < 1:
            raise ValueError(f"resolution must be >= 1 in both dimensions, got {w}x{h}")
        f = np.asarray(self.forward, dtype=np.float64)
        u = np.asarray(self.up, dtype=np.float64)
        if np.linalg.norm(f) < 1e-12 or np.linalg.norm(u) < 1e-12:
            raise ValueError("camera forward/up must be non-zero")
        if np.linalg.norm(np.cross(f, u)) < 1e-9:
            raise ValueError("camera forward and up are parallel")

    def basis(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Orthonormal (forward, right, up) with up re-derived from forward."""
        f = np.asarray(self.forward, dtype=np.float64)
        f = f / np.linalg.norm(f)
        u = np.asarray(self.up, dtype=np.float64)
        r = np.cross(f, u)
        r = r / np.linalg.norm(r)
        return f, r, np.cross(r, f)


@dataclass(frozen=True)
class RenderConfig:
    samples_per_pixel: int
    max_path_depth: int
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.samples_per_pixel < 1:
            raise ValueError(
                f"samples_per_pixel must be >= 1, got {self.samples_per_pixel}"
            )
        if self.max_path_depth < 1:
            raise ValueError(
                f"max_path_depth must be >= 1, got {self.max_path_depth}"
            )


@dataclass
class Image:
    """Row-major linear-radiance framebuffer; every channel finite and >= 0."""

    width: int
    height: int
    pixels: np.ndarray  # (height, width, 3) float64

    def __post_init__(self) -> None:
        self.pixels = np.asarray(self.pixels, dtype=np.float64)
        if self.pixels.shape != (self.height, self.width, 3):
            raise ValueError(
                f"pixel buffer shape {self.pixels.shape} does not match "
                f"{self.height}x{self.width}x3"
            )
        if not np.all(np.isfinite(self.pixels)):
            raise ValueError("image contains non-finite channels")
        if np.any(self.pixels < 0.0):
            raise ValueError("image contains negative channels")


# ---------------------------------------------------------------------------
# Scene file format (JSON, format_version 1) -- see README for the schema.


def scene_to_dict(scene: Scene, camera: Camera) -> dict:
    prims = []
    for prim in scene.primitives:
        if isinstance(prim, Sphere):
            prims.append(
                {
                    "type": "sphere",
                    "center": list(prim.center),
                    "radius": prim.radius,
                    "material": prim.material,
                }
            )
        else:
            prims.append(
                {
                    "type": "triangle",
                    "vertices": [list(v) for v in prim.vertices],
                    "material": prim.material,
                }
            )
    return {
        "format_version": SCENE_FORMAT_VERSION,
        "materials": [
            {
                "name": m.name,
                "albedo": list(m.albedo),
                "emission": list(m.emission),
            }
            for m in scene.materials
        ],
        "primitives": prims,
        "environment_radiance": list(scene.environment_radiance),
        "camera": {
            "position": list(camera.position),
            "forward": list(camera.forward),
            "up": list(camera.up),
            "vfov_degrees": math.degrees(camera.vfov_radians),
            "resolution": [int(camera.resolution[0]), int(camera.resolution[1])],
        },
    }


def scene_from_dict(doc: dict) -> tuple[Scene, Camera]:
    version = doc.get("format_version")
    if version != SCENE_FORMAT_VERSION:
        raise ValueError(f"unsupported scene format_version {version!r}")
    materials = tuple(
        Material(
            albedo=tuple(m["albedo"]),
            emission=tuple(m.get("emission", (0.0, 0.0, 0.0))),
            name=m.get("name", ""),
        )
        for m in doc["materials"]
    )
    names = {m.name: i for i, m in enumerate(materials) if m.name}

    def material_id(ref) -> int:
        if isinstance(ref, str):
            if ref not in names:
                raise ValueError(f"material name {ref!r} does not resolve")
            return names[ref]
        return int(ref)

    prims = []
    for p in doc["primitives"]:
        kind = p.get("type")
        if kind == "sphere":
            prims.append(
                Sphere(
                    center=tuple(p["center"]),
                    radius=float(p["radius"]),
                    material=material_id(p["material"]),
                )
            )
        elif kind == "triangle":
            prims.append(
                Triangle(
                    vertices=tuple(tuple(v) for v in p["vertices"]),
                    material=material_id(p["material"]),
                )
            )
        else:
            raise ValueError(f"unknown primitive type {kind!r}")
    scene = Scene(
        primitives=tuple(prims),
        materials=materials,
        environment_radiance=tuple(doc.get("environment_radiance", (0.0, 0.0, 0.0))),
    )
    cam = doc["camera"]
    camera = Camera(
        position=tuple(cam["position"]),
        forward=tuple(cam["forward"]),
        up=tuple(cam["up"]),
        vfov_radians=math.radians(float(cam["vfov_degrees"])),
        resolution=(int(cam["resolution"][0]), int(cam["resolution"][1])),
    )
    return scene, camera


def save_scene(scene: Scene, camera: Camera, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scene_to_dict(scene, camera), indent=2) + "\n")


def load_scene(path: str | Path) -> tuple[Scene, Camera]:
    return scene_from_dict(json.loads(Path(path).read_text()))
