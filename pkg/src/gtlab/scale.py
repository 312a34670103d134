"""Compute-scale arithmetic for interactive photorealistic rendering.

Given how long one frame takes on a single reference CPU and a target frame
rate, derive how many such CPUs must run in parallel and what that means in
peak and sustained TFlops.  Sustained throughput is peak scaled by the
rendering algorithm's efficiency ``eps = sustained / peak``.

All functions are pure and safe for concurrent use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

DEFAULT_FPS = 30.0

# Default efficiency of a well-tuned parallel renderer; message passing keeps
# workers waiting for data part of the time, so 100% is not attainable.
DEFAULT_EFFICIENCY = 0.5

# Reference desktop CPU used throughout the docs and presets.  The GFlops
# figure assumes 2 floating-point ops per cycle at 2.4 GHz.
PENTIUM4_2400 = None  # set below, after CpuDescriptor is defined

# Relative slack when deciding whether seconds_per_frame * fps already lands
# on an integer; guards ceil() against float noise like 0.1 * 30 = 3.0000...04.
_CEIL_REL_TOL = 1e-9


@dataclass(frozen=True)
class CpuDescriptor:
    """A single reference processor: name, clock, and floating-point rate."""

    name: str
    clock_ghz: float
    gflops: float

    def __post_init__(self) -> None:
        if not (self.clock_ghz > 0):
            raise ValueError(f"clock_ghz must be > 0, got {self.clock_ghz}")
        if not (self.gflops > 0):
            raise ValueError(f"gflops must be > 0, got {self.gflops}")


PENTIUM4_2400 = CpuDescriptor(name="Pentium IV 2.4 GHz", clock_ghz=2.4, gflops=4.8)


@dataclass(frozen=True)
class WorkloadMeasurement:
    """Seconds one frame took on a single reference CPU."""

    seconds_per_frame: float
    reference: CpuDescriptor

    def __post_init__(self) -> None:
        if not (self.seconds_per_frame > 0):
            raise ValueError(
                f"seconds_per_frame must be > 0, got {self.seconds_per_frame}"
            )


@dataclass(frozen=True)
class TargetInteractivity:
    """Frame rate at which the viewer perceives time as continuous."""

    frames_per_second: float = DEFAULT_FPS

    def __post_init__(self) -> None:
        if not (self.frames_per_second > 0):
            raise ValueError(
                f"frames_per_second must be > 0, got {self.frames_per_second}"
            )


@dataclass(frozen=True)
class ScaleEstimate:
    """Required parallelism and throughput, with the inputs that produced it.

    ``sustained_tflops == peak_tflops * efficiency`` by construction.  The
    optional context fields record the derivation inputs so reports and
    downstream verdicts can refer back to them.
    """

    n_processors: int
    peak_tflops: float
    sustained_tflops: float
    efficiency: float
    seconds_per_frame: float | None = None
    frames_per_second: float | None = None
    per_cpu: CpuDescriptor | None = None

    def __post_init__(self) -> None:
        if self.n_processors < 1:
            raise ValueError(f"n_processors must be >= 1, got {self.n_processors}")
        if not (0 < self.efficiency <= 1):
            raise ValueError(f"efficiency must be in (0, 1], got {self.efficiency}")
        expected = self.peak_tflops * self.efficiency
        if abs(self.sustained_tflops - expected) > 1e-9 * max(abs(expected), 1e-300):
            raise ValueError(
                "sustained_tflops must equal peak_tflops * efficiency "
                f"({self.sustained_tflops} vs {expected})"
            )


def required_parallelism(
    measurement: WorkloadMeasurement, target: TargetInteractivity
) -> int:
    """Number of reference CPUs needed to hit the target frame rate.

    ceil(seconds_per_frame * frames_per_second), with a small relative
    tolerance so products that are integral up to float rounding are not
    bumped to the next integer.
    """
    product = measurement.seconds_per_frame * target.frames_per_second
    nearest = round(product)
    if nearest >= 1 and abs(product - nearest) <= _CEIL_REL_TOL * max(product, 1.0):
        return int(nearest)
    return max(1, math.ceil(product))


def turing_scale(
    n: int, per_cpu: CpuDescriptor, efficiency: float = DEFAULT_EFFICIENCY
) -> ScaleEstimate:
    """Convert a processor count into peak and sustained TFlops."""
    if n < 1:
        raise ValueError(f"processor count must be >= 1, got {n}")
    if not (0 < efficiency <= 1):
        raise ValueError(f"efficiency must be in (0, 1], got {efficiency}")
    peak = n * per_cpu.gflops / 1000.0
    return ScaleEstimate(
        n_processors=n,
        peak_tflops=peak,
        sustained_tflops=peak * efficiency,
        efficiency=efficiency,
        per_cpu=per_cpu,
    )


def extrapolate(
    measurement: WorkloadMeasurement,
    target: TargetInteractivity,
    efficiency: float = DEFAULT_EFFICIENCY,
    per_cpu: CpuDescriptor | None = None,
) -> ScaleEstimate:
    """Full derivation: frame time + target rate -> processors -> TFlops.

    ``per_cpu`` defaults to the CPU the measurement was taken on.
    """
    cpu = per_cpu if per_cpu is not None else measurement.reference
    n = required_parallelism(measurement, target)
    base = turing_scale(n, cpu, efficiency)
    return ScaleEstimate(
        n_processors=base.n_processors,
        peak_tflops=base.peak_tflops,
        sustained_tflops=base.sustained_tflops,
        efficiency=base.efficiency,
        seconds_per_frame=measurement.seconds_per_frame,
        frames_per_second=target.frames_per_second,
        per_cpu=cpu,
    )


@dataclass(frozen=True)
class ThresholdVerdict:
    passed: bool
    margin_tflops: float


def passes_threshold(machine, required: ScaleEstimate) -> ThresholdVerdict:
    """Does a machine's sustained throughput clear the requirement?

    ``machine`` needs ``peak_tflops`` and ``sustained_tflops`` attributes.
    Sustained figures are compared (what the algorithm actually gets, not the
    hardware ceiling); equality passes.
    """
    margin = machine.sustained_tflops - required.sustained_tflops
    return ThresholdVerdict(passed=margin >= 0.0, margin_tflops=margin)


def scale_report(estimate: ScaleEstimate) -> str:
    """Human-readable derivation report.

    Prints the processor count under both readings: the ideal count (work /
    frame budget) and the count inflated by 1/efficiency, since a machine
    running at efficiency eps needs that many processors to sustain the same
    rate.
    """
    lines = []
    lines.append("Compute scale for interactive rendering")
    if estimate.seconds_per_frame is not None:
        lines.append(f"  measured frame time : {estimate.seconds_per_frame:g} s")
    if estimate.frames_per_second is not None:
        lines.append(f"  target frame rate   : {estimate.frames_per_second:g} fps")
    if estimate.per_cpu is not None:
        lines.append(
            f"  reference CPU       : {estimate.per_cpu.name}"
            f" ({estimate.per_cpu.gflops:g} GFlops)"
        )
    lines.append(f"  processors (ideal)  : {estimate.n_processors}")
    inflated = math.ceil(estimate.n_processors / estimate.efficiency)
    lines.append(
        f"  processors at eff.  : {inflated}"
        f" (ideal count / efficiency {estimate.efficiency:g})"
    )
    lines.append(f"  peak                : {estimate.peak_tflops:g} TFlops")
    lines.append(
        f"  sustained           : {estimate.sustained_tflops:g} TFlops"
        f" (efficiency {estimate.efficiency:g})"
    )
    return "\n".join(lines)


def scale_record(estimate: ScaleEstimate) -> dict:
    """Machine-readable record; same envelope as the simulator's report."""
    inputs: dict = {"efficiency": estimate.efficiency}
    if estimate.seconds_per_frame is not None:
        inputs["seconds_per_frame"] = estimate.seconds_per_frame
    if estimate.frames_per_second is not None:
        inputs["frames_per_second"] = estimate.frames_per_second
    if estimate.per_cpu is not None:
        inputs["cpu"] = {
            "name": estimate.per_cpu.name,
            "clock_ghz": estimate.per_cpu.clock_ghz,
            "gflops": estimate.per_cpu.gflops,
        }
    return {
        "record_format": 1,
        "command": "scale",
        "inputs": inputs,
        "results": {
            "n_processors": estimate.n_processors,
            "peak_tflops": estimate.peak_tflops,
            "sustained_tflops": estimate.sustained_tflops,
            "efficiency": estimate.efficiency,
        },
    }
