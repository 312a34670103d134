"""Path-tracing core: intersection, radiance estimation, and the render loop.

Estimator
    One sample per call: radiance = emission at the hit plus albedo times the
    recursive estimate along a cosine-weighted bounce.  With the cosine pdf,
    the Lambertian importance weight is exactly the albedo, so a path's value
    is the product of albedos picked up along the way times whatever emission
    or environment radiance it reaches.  Paths are cut off after
    ``max_path_depth`` surface hits (no Russian roulette); the truncated tail
    contributes zero, which keeps expected values exact finite series.

Determinism
    Every pixel owns a counter-based Philox stream keyed by
    ``(rng_seed, x, y)``; sample ``i`` reads row ``i`` of that stream's block
    (sub-pixel jitter first, then two uniforms per bounce).  Per-path
    arithmetic is elementwise and per-pixel averaging reduces over a single
    pixel's own samples, so images are bit-identical no matter how work is
    tiled or how many workers run.

Self-intersection
    Hits closer than ``EPS_T = 1e-4`` m are ignored (shadow-acne guard).
"""

from __future__ import annotations

import math
import statistics
import time
from dataclasses import dataclass
from multiprocessing import get_context

import numpy as np

from ..scale import CpuDescriptor
from .scene import Camera, Image, RenderConfig, Scene, Sphere, Triangle

EPS_T = 1e-4
_UNIT_TOL = 1e-9
_DET_EPS = 1e-12

# Cap on uniforms drawn per tile; keeps transient arrays around 64 MB.
_TILE_BUDGET_DOUBLES = 8_000_000


@dataclass(frozen=True)
class Hit:
    distance: float
    normal: np.ndarray  # unit vector, oriented against the incoming ray
    material_id: int


@dataclass
class RenderResult:
    image: Image
    wall_seconds: float


@dataclass(frozen=True)
class FrameTime:
    seconds_per_frame: float  # median across repetitions
    reference: CpuDescriptor
    samples: tuple[float, ...]


class _CompiledScene:
    """Scene flattened to per-primitive scalars plus gather arrays."""

    def __init__(self, scene: Scene) -> None:
        spheres = [p for p in scene.primitives if isinstance(p, Sphere)]
        tris = [p for p in scene.primitives if isinstance(p, Triangle)]
        self.spheres = [
            (p.center[0], p.center[1], p.center[2], p.radius, i)
            for i, p in enumerate(spheres)
        ]
        self.sph_center = np.array(
            [p.center for p in spheres], dtype=np.float64
        ).reshape(-1, 3)
        self.sph_inv_radius = np.array(
            [1.0 / p.radius for p in spheres], dtype=np.float64
        )
        self.sph_mat = np.array([p.material for p in spheres], dtype=np.int64)

        tri_data = []
        normals = []
        for i, p in enumerate(tris):
            a = np.asarray(p.vertices[0])
            e1 = np.asarray(p.vertices[1]) - a
            e2 = np.asarray(p.vertices[2]) - a
            n = np.cross(e1, e2)
            n = n / np.linalg.norm(n)
            tri_data.append((tuple(a), tuple(e1), tuple(e2), i))
            normals.append(n)
        self.triangles = tri_data
        self.tri_normal = np.array(normals, dtype=np.float64).reshape(-1, 3)
        self.tri_mat = np.array([p.material for p in tris], dtype=np.int64)

        self.mat_albedo = np.array(
            [m.albedo for m in scene.materials], dtype=np.float64
        ).reshape(-1, 3)
        self.mat_emission = np.array(
            [m.emission for m in scene.materials], dtype=np.float64
        ).reshape(-1, 3)
        self.env = np.asarray(scene.environment_radiance, dtype=np.float64)


def _intersect_batch(cs: _CompiledScene, ox, oy, oz, dx, dy, dz):
    """Nearest hit per ray.  Returns (t, nx, ny, nz, mat, hit_mask).

    Earlier primitives win exact distance ties (strict < replacement), so the
    result is independent of batch composition.
    """
    m = ox.shape[0]
    t_best = np.full(m, np.inf)
    kind = np.full(m, -1, dtype=np.int8)  # 0 sphere, 1 triangle
    idx = np.zeros(m, dtype=np.int64)

    for cx, cy, cz, radius, i in cs.spheres:
        ocx = ox - cx
        ocy = oy - cy
        ocz = oz - cz
        b = dx * ocx + dy * ocy + dz * ocz
        c2 = ocx * ocx + ocy * ocy + ocz * ocz - radius * radius
        disc = b * b - c2
        valid = disc >= 0.0
        s = np.sqrt(np.where(valid, disc, 0.0))
        t0 = -b - s
        t1 = -b + s
        t = np.where(t0 > EPS_T, t0, t1)
        closer = valid & (t > EPS_T) & (t < t_best)
        if closer.any():
            t_best = np.where(closer, t, t_best)
            kind = np.where(closer, np.int8(0), kind)
            idx = np.where(closer, i, idx)

    with np.errstate(divide="ignore", invalid="ignore"):
        for (v0x, v0y, v0z), (e1x, e1y, e1z), (e2x, e2y, e2z), i in cs.triangles:
            px = dy * e2z - dz * e2y
            py = dz * e2x - dx * e2z
            pz = dx * e2y - dy * e2x
            det = e1x * px + e1y * py + e1z * pz
            ok = np.abs(det) > _DET_EPS
            inv = 1.0 / det
            tvx = ox - v0x
            tvy = oy - v0y
            tvz = oz - v0z
            u = (tvx * px + tvy * py + tvz * pz) * inv
            ok &= (u >= 0.0) & (u <= 1.0)
            qx = tvy * e1z - tvz * e1y
            qy = tvz * e1x - tvx * e1z
            qz = tvx * e1y - tvy * e1x
            v = (dx * qx + dy * qy + dz * qz) * inv
            ok &= (v >= 0.0) & (u + v <= 1.0)
            t = (e2x * qx + e2y * qy + e2z * qz) * inv
            ok &= (t > EPS_T) & (t < t_best)
            if ok.any():
                t_best = np.where(ok, t, t_best)
                kind = np.where(ok, np.int8(1), kind)
                idx = np.where(ok, i, idx)

    hit = kind >= 0
    nx = np.zeros(m)
    ny = np.zeros(m)
    nz = np.zeros(m)
    mat = np.zeros(m, dtype=np.int64)

    sph = kind == 0
    if sph.any():
        si = idx[sph]
        c = cs.sph_center[si]
        inv_r = cs.sph_inv_radius[si]
        ts = t_best[sph]
        nx[sph] = (ox[sph] + ts * dx[sph] - c[:, 0]) * inv_r
        ny[sph] = (oy[sph] + ts * dy[sph] - c[:, 1]) * inv_r
        nz[sph] = (oz[sph] + ts * dz[sph] - c[:, 2]) * inv_r
        mat[sph] = cs.sph_mat[si]

    tri = kind == 1
    if tri.any():
        ti = idx[tri]
        n = cs.tri_normal[ti]
        nx[tri] = n[:, 0]
        ny[tri] = n[:, 1]
        nz[tri] = n[:, 2]
        mat[tri] = cs.tri_mat[ti]

    # Two-sided shading: orient the normal against the incoming ray.
    flip = (nx * dx + ny * dy + nz * dz) > 0.0
    sign = np.where(flip, -1.0, 1.0)
    return t_best, nx * sign, ny * sign, nz * sign, mat, hit


def _cosine_hemisphere(nx, ny, nz, u1, u2):
    """Cosine-weighted directions around per-lane unit normals (pdf cos/pi)."""
    r = np.sqrt(u1)
    phi = (2.0 * math.pi) * u2
    lx = r * np.cos(phi)
    ly = r * np.sin(phi)
    lz = np.sqrt(1.0 - u1)

    # Tangent frame: helper axis x or y, whichever is farther from the normal.
    use_y = np.abs(nx) > 0.9
    vx = np.where(use_y, -nz, 0.0)
    vy = np.where(use_y, 0.0, nz)
    vz = np.where(use_y, nx, -ny)
    inv = 1.0 / np.sqrt(vx * vx + vy * vy + vz * vz)
    vx *= inv
    vy *= inv
    vz *= inv
    ux = ny * vz - nz * vy
    uy = nz * vx - nx * vz
    uz = nx * vy - ny * vx

    dx = lx * ux + ly * vx + lz * nx
    dy = lx * uy + ly * vy + lz * ny
    dz = lx * uz + ly * vz + lz * nz
    return dx, dy, dz


def _trace_batch(cs: _CompiledScene, ox, oy, oz, dx, dy, dz, uniforms) -> np.ndarray:
    """Estimate radiance for a batch of rays.

    ``uniforms`` has shape (paths, depth, 2); row ``b`` feeds bounce ``b``.
    A path's value never depends on which other paths share the batch.
    """
    n_paths, depth, _ = uniforms.shape
    radiance = np.zeros((n_paths, 3))
    act_idx = np.arange(n_paths)
    act_thr = np.ones((n_paths, 3))

    for bounce in range(depth):
        if act_idx.size == 0:
            break
        t, nx, ny, nz, mat, hit = _intersect_batch(cs, ox, oy, oz, dx, dy, dz)

        miss = ~hit
        if miss.any():
            gi = act_idx[miss]
            radiance[gi] += act_thr[miss] * cs.env

        if not hit.any():
            break
        gi = act_idx[hit]
        thr = act_thr[hit]
        radiance[gi] += thr * cs.mat_emission[mat[hit]]
        thr = thr * cs.mat_albedo[mat[hit]]

        live = thr.max(axis=1) > 0.0
        if not live.any():
            break
        gi = gi[live]
        hx = (ox[hit] + t[hit] * dx[hit])[live]
        hy = (oy[hit] + t[hit] * dy[hit])[live]
        hz = (oz[hit] + t[hit] * dz[hit])[live]
        u = uniforms[gi, bounce, :]
        dx, dy, dz = _cosine_hemisphere(
            nx[hit][live], ny[hit][live], nz[hit][live], u[:, 0], u[:, 1]
        )
        ox, oy, oz = hx, hy, hz
        act_idx = gi
        act_thr = thr[live]

    return radiance


def _pixel_uniforms(seed: int, x: int, y: int, n_samples: int, depth: int) -> np.ndarray:
    """The pixel's whole random block: one row per sample.

    Columns 0-1 are sub-pixel jitter; columns 2+2b, 3+2b feed bounce b.
    Keyed by (seed, x, y) so the stream is independent of tiling and worker
    count; the Philox generator makes the block a pure function of the key.
    """
    key = np.array(
        [
            seed & 0xFFFFFFFFFFFFFFFF,
            ((x & 0xFFFFFFFF) << 32) | (y & 0xFFFFFFFF),
        ],
        dtype=np.uint64,
    )
    gen = np.random.Generator(np.random.Philox(key=key))
    return gen.random((n_samples, 2 + 2 * depth))


def _plan_tiles(n_pixels: int, config: RenderConfig) -> list[tuple[int, int]]:
    """Fixed tiling over row-major pixel index; function of config only."""
    block = config.samples_per_pixel * (2 + 2 * config.max_path_depth)
    per_tile = max(1, min(n_pixels, _TILE_BUDGET_DOUBLES // block))
    return [
        (start, min(start + per_tile, n_pixels))
        for start in range(0, n_pixels, per_tile)
    ]


def _render_tile(
    cs: _CompiledScene, camera: Camera, config: RenderConfig, start: int, stop: int
) -> np.ndarray:
    w, h = int(camera.resolution[0]), int(camera.resolution[1])
    n = config.samples_per_pixel
    depth = config.max_path_depth

    pix = np.arange(start, stop)
    xs = pix % w
    ys = pix // w
    n_px = pix.size

    blocks = np.stack(
        [
            _pixel_uniforms(config.rng_seed, int(x), int(y), n, depth)
            for x, y in zip(xs, ys)
        ]
    )  # (n_px, n, 2 + 2*depth)

    u0 = blocks[:, :, 0]
    u1 = blocks[:, :, 1]
    grid = math.isqrt(n)
    if grid * grid == n:
        sidx = np.arange(n)
        jx = ((sidx % grid)[None, :] + u0) / grid
        jy = ((sidx // grid)[None, :] + u1) / grid
    else:
        jx, jy = u0, u1  # sample count not square: plain jitter

    fwd, right, up = camera.basis()
    tan_half = math.tan(camera.vfov_radians / 2.0)
    aspect = w / h
    sx = ((xs[:, None] + jx) / w * 2.0 - 1.0) * (aspect * tan_half)
    sy = (1.0 - (ys[:, None] + jy) / h * 2.0) * tan_half
    sx = sx.reshape(-1)
    sy = sy.reshape(-1)

    dx = fwd[0] + sx * right[0] + sy * up[0]
    dy = fwd[1] + sx * right[1] + sy * up[1]
    dz = fwd[2] + sx * right[2] + sy * up[2]
    inv = 1.0 / np.sqrt(dx * dx + dy * dy + dz * dz)
    dx *= inv
    dy *= inv
    dz *= inv

    n_paths = n_px * n
    px, py, pz = camera.position
    ox = np.full(n_paths, px)
    oy = np.full(n_paths, py)
    oz = np.full(n_paths, pz)

    uniforms = blocks[:, :, 2:].reshape(n_paths, depth, 2)
    values = _trace_batch(cs, ox, oy, oz, dx, dy, dz, uniforms)

    # Per-pixel mean over that pixel's own contiguous samples; the reduction
    # sees an (n, 3) block regardless of tile shape, preserving bit equality.
    out = np.empty((n_px, 3))
    values = values.reshape(n_px, n, 3)
    for p in range(n_px):
        out[p] = np.add.reduce(values[p], axis=0)
    out /= n
    return out


_WORKER_STATE: dict = {}


def _worker_init(scene: Scene, camera: Camera, config: RenderConfig) -> None:
    _WORKER_STATE["cs"] = _CompiledScene(scene)
    _WORKER_STATE["camera"] = camera
    _WORKER_STATE["config"] = config


def _worker_tile(span: tuple[int, int]) -> tuple[int, int, np.ndarray]:
    start, stop = span
    arr = _render_tile(
        _WORKER_STATE["cs"], _WORKER_STATE["camera"], _WORKER_STATE["config"],
        start, stop,
    )
    return start, stop, arr


def intersect(scene: Scene, origin, direction) -> Hit | None:
    """Nearest intersection of one ray with the scene, or None.

    ``direction`` must be unit length within 1e-9.  Hits closer than
    ``EPS_T`` are ignored.
    """
    d = np.asarray(direction, dtype=np.float64)
    if abs(np.linalg.norm(d) - 1.0) > _UNIT_TOL:
        raise ValueError("ray direction must be normalized within 1e-9")
    o = np.asarray(origin, dtype=np.float64)
    cs = _CompiledScene(scene)
    t, nx, ny, nz, mat, hit = _intersect_batch(
        cs,
        np.array([o[0]]), np.array([o[1]]), np.array([o[2]]),
        np.array([d[0]]), np.array([d[1]]), np.array([d[2]]),
    )
    if not hit[0]:
        return None
    return Hit(
        distance=float(t[0]),
        normal=np.array([nx[0], ny[0], nz[0]]),
        material_id=int(mat[0]),
    )


def estimate_radiance(
    scene: Scene, origin, direction, config: RenderConfig, rng: np.random.Generator
) -> np.ndarray:
    """One unbiased radiance sample along a ray (see module docstring).

    ``rng`` supplies the bounce uniforms; pass a seeded Generator for
    reproducible estimates.
    """
    d = np.asarray(direction, dtype=np.float64)
    if abs(np.linalg.norm(d) - 1.0) > _UNIT_TOL:
        raise ValueError("ray direction must be normalized within 1e-9")
    o = np.asarray(origin, dtype=np.float64)
    cs = _CompiledScene(scene)
    uniforms = rng.random((config.max_path_depth, 2)).reshape(
        1, config.max_path_depth, 2
    )
    values = _trace_batch(
        cs,
        np.array([o[0]]), np.array([o[1]]), np.array([o[2]]),
        np.array([d[0]]), np.array([d[1]]), np.array([d[2]]),
        uniforms,
    )
    return values[0]


def render(
    scene: Scene, camera: Camera, config: RenderConfig, workers: int = 1
) -> RenderResult:
    """Render the frame; bit-identical output for any ``workers`` count."""
    camera.validate()
    w, h = int(camera.resolution[0]), int(camera.resolution[1])
    n_pixels = w * h
    tiles = _plan_tiles(n_pixels, config)

    t0 = time.perf_counter()
    flat = np.empty((n_pixels, 3))
    if workers <= 1:
        cs = _CompiledScene(scene)
        for start, stop in tiles:
            flat[start:stop] = _render_tile(cs, camera, config, start, stop)
    else:
        ctx = get_context()
        with ctx.Pool(
            processes=workers,
            initializer=_worker_init,
            initargs=(scene, camera, config),
        ) as pool:
            for start, stop, arr in pool.imap_unordered(_worker_tile, tiles):
                flat[start:stop] = arr
    wall = time.perf_counter() - t0

    image = Image(width=w, height=h, pixels=flat.reshape(h, w, 3))
    return RenderResult(image=image, wall_seconds=wall)


def measure_frame_time(
    scene: Scene,
    camera: Camera,
    config: RenderConfig,
    repetitions: int,
    reference: CpuDescriptor,
) -> FrameTime:
    """Median single-worker wall time per frame across ``repetitions`` runs.

    ``reference`` records the GFlops this machine is assumed to deliver, so
    the measurement can feed the scale extrapolation.
    """
    if repetitions < 1:
        raise ValueError(f"repetitions must be >= 1, got {repetitions}")
    times = tuple(
        render(scene, camera, config, workers=1).wall_seconds
        for _ in range(repetitions)
    )
    return FrameTime(
        seconds_per_frame=statistics.median(times),
        reference=reference,
        samples=times,
    )
