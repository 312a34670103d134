"""Acceptance suite: one test per release criterion, at its stated tolerance.

Each test prints a PASS line with its measured runtime (run with ``pytest -s``
to watch them stream by).  Budgets are asserted, not just reported.
"""

import json
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from gtlab.distsim import decompose, load_catalog, simulate_frame, sweep
from gtlab.harness.selftest import run_selftest
from gtlab.protocol import (
    SimulatedObserver,
    Stimulus,
    VERDICT_FAILED,
    VERDICT_PASSED,
    binomial_p_value,
    evaluate,
    plan_trials,
    simulate_subject,
)
from gtlab.render.imageio import ppm_bytes
from gtlab.render.presets import cornell_box, furnace_box
from gtlab.render.scene import RenderConfig
from gtlab.render.tracer import render
from gtlab.scale import (
    CpuDescriptor,
    TargetInteractivity,
    WorkloadMeasurement,
    extrapolate,
)

from pathlib import Path


def _report(name: str, elapsed: float, budget: float) -> None:
    print(f"ACCEPTANCE PASS: {name} ({elapsed:.3f}s, budget {budget:g}s)")
    assert elapsed < budget, f"{name} exceeded its runtime budget"


def test_scale_regression():
    cpu = CpuDescriptor("reference", 2.4, 4.8)
    measurement = WorkloadMeasurement(7200.0, cpu)
    target = TargetInteractivity(30.0)
    extrapolate(measurement, target, efficiency=0.5)  # warm the path
    t0 = time.perf_counter()
    est = extrapolate(measurement, target, efficiency=0.5)
    elapsed = time.perf_counter() - t0
    assert est.n_processors == 216000
    assert abs(est.peak_tflops - 1036.8) <= 1e-9 * 1036.8
    assert abs(est.sustained_tflops - 518.4) <= 1e-9 * 518.4
    _report("scale regression {216000, 1036.8, 518.4}", elapsed, 0.001)


def test_preset_regression():
    catalog = load_catalog()  # warm the file read
    t0 = time.perf_counter()
    arch = catalog["BlueGeneL"]
    peak = arch.peak_tflops
    eps = (
        arch.metadata["published_sustained_tflops"]
        / arch.metadata["published_peak_tflops"]
    )
    elapsed = time.perf_counter() - t0
    assert abs(peak - 367.0) / 367.0 < 0.002
    assert abs(eps - 0.7646) <= 0.0005
    _report("BlueGene/L preset peak 367 TFlops, eps 0.7646", elapsed, 0.001)


def test_renderer_furnace():
    scene, camera = furnace_box(resolution=(32, 32))
    cfg = RenderConfig(samples_per_pixel=1024, max_path_depth=32, rng_seed=2024)
    t0 = time.perf_counter()
    result = render(scene, camera, cfg, workers=1)
    elapsed = time.perf_counter() - t0
    deviation = np.abs(result.image.pixels - 1.0)
    assert float(deviation.max()) < 0.01, f"worst pixel off by {deviation.max()}"
    _report("furnace: every pixel within 1% of 1.0", elapsed, 60.0)


def test_convergence_slope():
    scene, camera = cornell_box(resolution=(64, 64))
    depth = 5
    t0 = time.perf_counter()
    reference = render(
        scene, camera, RenderConfig(4096, depth, rng_seed=9000), workers=2
    ).image.pixels
    logs_n, logs_rmse = [], []
    for n in (4, 16, 64, 256):
        img = render(
            scene, camera, RenderConfig(n, depth, rng_seed=31), workers=2
        ).image.pixels
        rmse = math.sqrt(float(((img - reference) ** 2).mean()))
        logs_n.append(math.log(n))
        logs_rmse.append(math.log(rmse))
    elapsed = time.perf_counter() - t0
    slope = np.polyfit(logs_n, logs_rmse, 1)[0]
    assert -0.6 <= slope <= -0.4, f"slope {slope}"
    _report(f"Monte Carlo convergence slope {slope:.3f} in -0.5 +- 0.1", elapsed, 600.0)


def test_determinism_across_worker_counts():
    scene, camera = cornell_box(resolution=(64, 64))
    cfg = RenderConfig(samples_per_pixel=32, max_path_depth=5, rng_seed=7)
    t0 = time.perf_counter()
    ppm_1 = ppm_bytes(render(scene, camera, cfg, workers=1).image)
    ppm_8 = ppm_bytes(render(scene, camera, cfg, workers=8).image)
    elapsed = time.perf_counter() - t0
    assert ppm_1 == ppm_8
    _report("determinism: 1-worker and 8-worker PPMs byte-identical", elapsed, 60.0)


def test_simulator_oracle():
    t0 = time.perf_counter()
    # Hand-traced 2-node schedule: compute 1 s/tile, latency 0.1 s,
    # transfer 0.2 s, serial master -> frame 1.5 s, efficiency 2/3.
    arch_kw = dict(name="oracle", gflops_per_node=1.0, interactive=True)
    from gtlab.distsim import SystemArchetype

    traced = simulate_frame(
        SystemArchetype(
            node_count=2, link_latency_s=0.1, bandwidth_bytes_per_s=5e6, **arch_kw
        ),
        decompose(2.0, 2, bytes_per_tile_result=1e6),
        ref_gflops=1.0,
    )
    assert traced.frame_time_s == 1.5
    assert traced.efficiency == 2.0 / 3.0
    # Zero-latency uniform N-way: lossless for N in {1, 2, 4, 64}.
    for n in (1, 2, 4, 64):
        lossless = simulate_frame(
            SystemArchetype(
                node_count=n, link_latency_s=0.0,
                bandwidth_bytes_per_s=math.inf, **arch_kw
            ),
            decompose(64.0, n),
            ref_gflops=1.0,
        )
        assert lossless.efficiency == 1.0, n
        assert lossless.frame_time_s == 64.0 / n
    elapsed = time.perf_counter() - t0
    _report("simulator oracle: frame 1.5 s, eps 2/3; lossless eps = 1", elapsed, 1.0)


def test_simulator_monotonicity():
    from gtlab.distsim import SystemArchetype

    arch = SystemArchetype(
        name="mono", node_count=8, gflops_per_node=1.0,
        link_latency_s=0.0, bandwidth_bytes_per_s=1e8, interactive=True,
    )
    job = decompose(16.0, 8, bytes_per_tile_result=1e6)
    grid = [0.0, 1e-5, 1e-4, 1e-3, 1e-2, 0.05, 0.1, 0.5, 1.0, 5.0]
    t0 = time.perf_counter()
    rows = sweep(arch, job, "latency", grid, ref_gflops=1.0)
    elapsed = time.perf_counter() - t0
    effs = [row.result.efficiency for row in rows]
    assert len(effs) == 10
    assert all(a >= b for a, b in zip(effs, effs[1:])), effs
    _report("simulator: efficiency non-increasing over latency sweep", elapsed, 1.0)


def test_binomial_oracle():
    # Independent enumeration: Pascal's triangle by additive recurrence.
    t0 = time.perf_counter()
    rows = [[1]]
    for n in range(1, 21):
        prev = rows[-1]
        rows.append([1] + [prev[j - 1] + prev[j] for j in range(1, n)] + [1])
    for n in range(1, 21):
        for k in range(n + 1):
            expected = float(Fraction(sum(rows[n][k:]), 2**n))
            assert abs(binomial_p_value(n, k) - expected) < 1e-12, (n, k)
    assert binomial_p_value(10, 10) == 0.0009765625
    elapsed = time.perf_counter() - t0
    _report("binomial tail matches enumeration for all n <= 20", elapsed, 1.0)


def test_protocol_calibration():
    pool = [
        Stimulus(id="cal-r", kind="real", image_path=Path("<sim>")),
        Stimulus(id="cal-s", kind="synthetic", image_path=Path("<sim>")),
    ]
    t0 = time.perf_counter()
    passed = 0
    for s in range(200):
        plan = plan_trials(pool, 64, seed=50_000 + s)
        session = simulate_subject(
            SimulatedObserver(per_trial_accuracy=0.5, seed=90_000 + s), plan, pool
        )
        passed += evaluate(session, pool).verdict == VERDICT_PASSED
    chance_fraction = passed / 200
    assert 0.90 <= chance_fraction <= 1.0, chance_fraction

    failed = 0
    for s in range(100):
        plan = plan_trials(pool, 100, seed=70_000 + s)
        session = simulate_subject(
            SimulatedObserver(per_trial_accuracy=0.9, seed=80_000 + s), plan, pool
        )
        failed += evaluate(session, pool).verdict == VERDICT_FAILED
    elapsed = time.perf_counter() - t0
    assert failed >= 99, failed
    _report(
        f"calibration: chance PASSED {chance_fraction:.3f}, strong FAILED {failed}/100",
        elapsed, 10.0,
    )


def test_end_to_end_selftest(tmp_path):
    messages = []
    t0 = time.perf_counter()
    summary = run_selftest(tmp_path, trials=8, seed=7, echo=messages.append)
    elapsed = time.perf_counter() - t0
    assert summary["mode"] == "end_to_end"
    assert summary["result"]["n"] == 8
    assert summary["replay_identical"] is True
    assert summary["ok"] is True
    # The log alone must reproduce the same result record.
    from gtlab.harness.store import analyze_log_dir

    rows = analyze_log_dir(tmp_path / "sessions")
    assert len(rows) == 1
    for key in ("n", "k_correct", "p_value", "alpha", "verdict"):
        assert rows[0][key] == summary["result"][key]
    _report("end-to-end selftest with log replay", elapsed, 120.0)
