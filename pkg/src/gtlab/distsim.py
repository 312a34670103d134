"""Discrete-event simulation of one frame rendered on a parallel machine.

The model is deliberately small: tiles of a frame are assigned round-robin to
workers, each worker computes its tiles back to back, and every finished tile
is shipped to a master that can only ingest one result at a time.  Frame time
is when the master finishes receiving the last tile.  Communication cost is
``link latency + bytes / bandwidth`` per message; the serial master is what
makes workers' results queue up and efficiency drop below 1.

Efficiency is ``sustained / peak``: the floating-point rate the frame
actually achieved over the machine's theoretical ceiling.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .scale import ScaleEstimate

# Worker index used for master-side (receive) events in the event log.
MASTER = -1

_FRACTION_SUM_TOL = 1e-9

SWEEP_CSV_COLUMNS = (
    "parameter",
    "frame_time_s",
    "achieved_fps",
    "peak_tflops",
    "sustained_tflops",
    "efficiency",
)


@dataclass(frozen=True)
class SystemArchetype:
    """A parallel machine reduced to what the frame model needs.

    ``gpu_render_speedup`` scales per-node render throughput (1 for CPU-only
    nodes); machine peak includes it, so efficiency stays in (0, 1].
    ``interactive`` is False for batch-queued systems.  ``metadata`` carries
    catalog figures the model does not consume (published peak/sustained,
    all-to-all latencies, physics speedups, provenance notes).
    """

    name: str
    node_count: int
    gflops_per_node: float
    link_latency_s: float
    bandwidth_bytes_per_s: float
    gpu_render_speedup: float = 1.0
    interactive: bool = True
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.node_count < 1:
            raise ValueError(f"node_count must be >= 1, got {self.node_count}")
        if not (self.gflops_per_node > 0):
            raise ValueError(
                f"gflops_per_node must be > 0, got {self.gflops_per_node}"
            )
        if self.link_latency_s < 0:
            raise ValueError(
                f"link_latency_s must be >= 0, got {self.link_latency_s}"
            )
        if not (self.bandwidth_bytes_per_s > 0):
            raise ValueError(
                f"bandwidth_bytes_per_s must be > 0, got {self.bandwidth_bytes_per_s}"
            )
        if self.gpu_render_speedup < 1:
            raise ValueError(
                f"gpu_render_speedup must be >= 1, got {self.gpu_render_speedup}"
            )

    @property
    def peak_tflops(self) -> float:
        return self.node_count * self.gflops_per_node * self.gpu_render_speedup / 1000.0


@dataclass(frozen=True)
class RenderJob:
    """One frame's worth of work, split into tiles.

    ``total_work_s_ref`` is the frame's cost in seconds on a single reference
    CPU; ``work_split`` gives each tile's fraction of it (summing to 1).
    ``scene_broadcast_bytes`` models shipping the geometry to every worker
    before any compute starts (broadcast in parallel; default free).
    """

    total_work_s_ref: float
    tile_count: int
    bytes_per_tile_result: float
    work_split: tuple[float, ...]
    scene_broadcast_bytes: float = 0.0

    def __post_init__(self) -> None:
        if not (self.total_work_s_ref > 0):
            raise ValueError(
                f"total_work_s_ref must be > 0, got {self.total_work_s_ref}"
            )
        if self.tile_count < 1:
            raise ValueError(f"tile_count must be >= 1, got {self.tile_count}")
        if self.bytes_per_tile_result < 0:
            raise ValueError(
                f"bytes_per_tile_result must be >= 0, got {self.bytes_per_tile_result}"
            )
        if self.scene_broadcast_bytes < 0:
            raise ValueError(
                f"scene_broadcast_bytes must be >= 0, got {self.scene_broadcast_bytes}"
            )
        if len(self.work_split) != self.tile_count:
            raise ValueError(
                f"work_split has {len(self.work_split)} entries for "
                f"{self.tile_count} tiles"
            )
        if any(f < 0 for f in self.work_split):
            raise ValueError("work_split fractions must be >= 0")
        total = math.fsum(self.work_split)
        if abs(total - 1.0) > _FRACTION_SUM_TOL:
            raise ValueError(f"work_split must sum to 1, got {total!r}")


@dataclass(frozen=True)
class EventRecord:
    time: float
    worker: int  # MASTER (-1) for receive events
    event: str


@dataclass(frozen=True)
class SimResult:
    frame_time_s: float
    achieved_fps: float
    peak_tflops: float
    sustained_tflops: float
    efficiency: float
    event_log: tuple[EventRecord, ...]


def decompose(
    job_work_s: float,
    tile_count: int,
    strategy: str = "uniform",
    fractions: Sequence[float] | None = None,
    bytes_per_tile_result: float = 0.0,
    scene_broadcast_bytes: float = 0.0,
) -> RenderJob:
    """Split a frame's work across tiles.

    ``uniform`` assigns equal fractions; ``weighted`` validates and keeps the
    caller's fractions.
    """
    if strategy == "uniform":
        if fractions is not None:
            raise ValueError("uniform strategy takes no fractions")
        split = (1.0 / tile_count,) * tile_count if tile_count >= 1 else ()
    elif strategy == "weighted":
        if fractions is None:
            raise ValueError("weighted strategy requires fractions")
        split = tuple(float(f) for f in fractions)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    return RenderJob(
        total_work_s_ref=job_work_s,
        tile_count=tile_count,
        bytes_per_tile_result=bytes_per_tile_result,
        work_split=split,
        scene_broadcast_bytes=scene_broadcast_bytes,
    )


def simulate_frame(
    arch: SystemArchetype, job: RenderJob, ref_gflops: float
) -> SimResult:
    """Run the event model for one frame and report throughput.

    Tiles go round-robin to ``min(node_count, tile_count)`` workers.  A
    worker's compute time for a tile is its work fraction scaled by the speed
    ratio between the reference CPU and the (possibly GPU-assisted) node.
    Results are sent as soon as computed; a message sent at ``t`` is ready at
    the master at ``t + latency`` and occupies it for ``bytes / bandwidth``
    seconds, first come first served (ties broken by worker index).
    """
    if not (ref_gflops > 0):
        raise ValueError(f"ref_gflops must be > 0, got {ref_gflops}")

    workers = min(arch.node_count, job.tile_count)
    node_rate = arch.gflops_per_node * arch.gpu_render_speedup
    speed_ratio = ref_gflops / node_rate
    transfer_s = job.bytes_per_tile_result / arch.bandwidth_bytes_per_s

    events: list[EventRecord] = []
    startup = 0.0
    if job.scene_broadcast_bytes > 0:
        startup = (
            arch.link_latency_s
            + job.scene_broadcast_bytes / arch.bandwidth_bytes_per_s
        )
        for wkr in range(workers):
            events.append(EventRecord(startup, wkr, "geometry_received"))
    worker_clock = [startup] * workers
    arrivals: list[tuple[float, int, int]] = []  # (ready_at_master, worker, tile)
    for tile in range(job.tile_count):
        wkr = tile % workers
        duration = job.work_split[tile] * job.total_work_s_ref * speed_ratio
        start = worker_clock[wkr]
        end = start + duration
        worker_clock[wkr] = end
        events.append(EventRecord(start, wkr, f"compute_start tile={tile}"))
        events.append(EventRecord(end, wkr, f"compute_end tile={tile}"))
        events.append(EventRecord(end, wkr, f"send tile={tile}"))
        arrivals.append((end + arch.link_latency_s, wkr, tile))

    arrivals.sort()
    master_free = 0.0
    for ready, wkr, tile in arrivals:
        begin = ready if ready > master_free else master_free
        finish = begin + transfer_s
        master_free = finish
        events.append(EventRecord(begin, MASTER, f"receive_start tile={tile}"))
        events.append(EventRecord(finish, MASTER, f"receive_end tile={tile}"))

    frame_time = master_free
    events.sort(key=lambda e: (e.time, e.worker))

    peak = arch.peak_tflops
    sustained = (job.total_work_s_ref * ref_gflops / 1000.0) / frame_time
    efficiency = sustained / peak
    # The model can't exceed peak; shave float residue so the invariant
    # efficiency <= 1 holds exactly in the lossless corner cases.
    if 1.0 < efficiency <= 1.0 + 1e-12:
        efficiency = 1.0
        sustained = peak
    return SimResult(
        frame_time_s=frame_time,
        achieved_fps=1.0 / frame_time,
        peak_tflops=peak,
        sustained_tflops=sustained,
        efficiency=efficiency,
        event_log=tuple(events),
    )


@dataclass(frozen=True)
class SweepRow:
    parameter: str
    value: float
    result: SimResult | None
    error: str | None = None


_SWEEPABLE = ("latency", "node_count", "tile_count")


def sweep(
    arch: SystemArchetype,
    job: RenderJob,
    parameter: str,
    grid: Iterable[float],
    ref_gflops: float,
) -> list[SweepRow]:
    """Simulate the frame once per grid value of one parameter.

    A value that fails validation produces an error row; the sweep continues.
    Changing ``tile_count`` re-decomposes the job uniformly.
    """
    values = list(grid)
    if not values:
        raise ValueError("grid must be non-empty")
    if parameter not in _SWEEPABLE:
        raise ValueError(f"parameter must be one of {_SWEEPABLE}, got {parameter!r}")

    rows: list[SweepRow] = []
    for value in values:
        try:
            if parameter == "latency":
                a, j = replace(arch, link_latency_s=float(value)), job
            elif parameter == "node_count":
                a, j = replace(arch, node_count=int(value)), job
            else:
                j = decompose(
                    job.total_work_s_ref,
                    int(value),
                    bytes_per_tile_result=job.bytes_per_tile_result,
                    scene_broadcast_bytes=job.scene_broadcast_bytes,
                )
                a = arch
            rows.append(SweepRow(parameter, float(value), simulate_frame(a, j, ref_gflops)))
        except (ValueError, TypeError) as exc:
            rows.append(SweepRow(parameter, float(value), None, error=str(exc)))
    return rows


def sweep_csv(rows: Sequence[SweepRow]) -> str:
    """Render sweep rows as CSV with the fixed column header.

    Error rows keep their parameter value and leave the result columns empty.
    """
    out = [",".join(SWEEP_CSV_COLUMNS)]
    for row in rows:
        if row.result is None:
            out.append(f"{row.value!r},,,,,")
        else:
            r = row.result
            out.append(
                f"{row.value!r},{r.frame_time_s!r},{r.achieved_fps!r},"
                f"{r.peak_tflops!r},{r.sustained_tflops!r},{r.efficiency!r}"
            )
    return "\n".join(out) + "\n"


@dataclass(frozen=True)
class GtsVerdict:
    passed: bool
    reasons: tuple[str, ...]


def gts_verdict(
    arch: SystemArchetype, required: ScaleEstimate, sim: SimResult
) -> GtsVerdict:
    """Would this machine pass the interactive-indistinguishability bar?

    Pass requires hitting the target frame rate recorded in ``required`` and
    an interactive (non-batch) machine.  Reasons list every failed condition.
    """
    target_fps = required.frames_per_second
    if target_fps is None:
        raise ValueError("required estimate carries no target frame rate")
    reasons = []
    if not arch.interactive:
        reasons.append(
            f"{arch.name} is batch-queued, typically not run interactively"
        )
    if sim.achieved_fps < target_fps:
        reasons.append(
            f"achieved {sim.achieved_fps:g} fps < target {target_fps:g} fps"
        )
    return GtsVerdict(passed=not reasons, reasons=tuple(reasons))


def sim_record(arch: SystemArchetype, job: RenderJob, ref_gflops: float,
               result: SimResult) -> dict:
    """Machine-readable record; same envelope as the scale report."""
    return {
        "record_format": 1,
        "command": "simulate",
        "inputs": {
            "archetype": arch.name,
            "node_count": arch.node_count,
            "gflops_per_node": arch.gflops_per_node,
            "gpu_render_speedup": arch.gpu_render_speedup,
            "link_latency_s": arch.link_latency_s,
            "bandwidth_bytes_per_s": arch.bandwidth_bytes_per_s,
            "interactive": arch.interactive,
            "total_work_s_ref": job.total_work_s_ref,
            "tile_count": job.tile_count,
            "bytes_per_tile_result": job.bytes_per_tile_result,
            "scene_broadcast_bytes": job.scene_broadcast_bytes,
            "ref_gflops": ref_gflops,
        },
        "results": {
            "frame_time_s": result.frame_time_s,
            "achieved_fps": result.achieved_fps,
            "peak_tflops": result.peak_tflops,
            "sustained_tflops": result.sustained_tflops,
            "efficiency": result.efficiency,
        },
    }


def _archetype_from_dict(entry: dict) -> SystemArchetype:
    bandwidth = entry["bandwidth_bytes_per_s"]
    if bandwidth == "inf":
        bandwidth = math.inf
    return SystemArchetype(
        name=entry["name"],
        node_count=int(entry["node_count"]),
        gflops_per_node=float(entry["gflops_per_node"]),
        link_latency_s=float(entry["link_latency_s"]),
        bandwidth_bytes_per_s=float(bandwidth),
        gpu_render_speedup=float(entry.get("gpu_render_speedup", 1.0)),
        interactive=bool(entry.get("interactive", True)),
        metadata=dict(entry.get("metadata", {})),
    )


def load_catalog(path: str | Path | None = None) -> dict[str, SystemArchetype]:
    """Load the archetype preset catalog (shipped JSON unless a path is given)."""
    if path is None:
        text = resources.files("gtlab.data").joinpath("archetypes.json").read_text()
    else:
        text = Path(path).read_text()
    doc = json.loads(text)
    if doc.get("format_version") != 1:
        raise ValueError(
            f"unsupported catalog format_version {doc.get('format_version')!r}"
        )
    catalog = {}
    for entry in doc["archetypes"]:
        arch = _archetype_from_dict(entry)
        if arch.name in catalog:
            raise ValueError(f"duplicate archetype name {arch.name!r}")
        catalog[arch.name] = arch
    return catalog
