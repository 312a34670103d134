"""Deterministic Monte Carlo path tracer producing measurable stimuli."""

from .scene import (
    Camera,
    Image,
    Material,
    RenderConfig,
    Scene,
    Sphere,
    Triangle,
    load_scene,
    save_scene,
)
from .tracer import (
    Hit,
    RenderResult,
    estimate_radiance,
    intersect,
    measure_frame_time,
    render,
)
from .imageio import ppm_bytes, read_image, read_ppm, write_png, write_ppm

__all__ = [
    "Camera",
    "Hit",
    "Image",
    "Material",
    "RenderConfig",
    "RenderResult",
    "Scene",
    "Sphere",
    "Triangle",
    "estimate_radiance",
    "intersect",
    "load_scene",
    "measure_frame_time",
    "ppm_bytes",
    "read_image",
    "read_ppm",
    "render",
    "save_scene",
    "write_png",
    "write_ppm",
]
