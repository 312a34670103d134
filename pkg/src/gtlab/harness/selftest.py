"""Human-free end-to-end exercise of the whole lab.

The default mode renders two stimuli from the Cornell preset -- a clean
high-sample frame standing in for "real" and a deliberately noisy low-sample
frame as "synthetic" -- then plans a session, runs a threshold observer over
the persisted store, evaluates, and finally replays the session log from
disk to prove the stored state reproduces the identical result.

Calibration mode (``observer_accuracy`` set) skips rendering and runs many
seeded accuracy-q observers through fresh plans, reporting how often the
verdict lands PASSED.  At q = 0.5 that fraction estimates 1 - alpha*, the
complement of the test's actual false-positive rate.
"""

from __future__ import annotations

import json
from pathlib import Path

from ..protocol import (
    DEFAULT_ALPHA,
    EPISTEMIC_CAVEAT,
    SimulatedObserver,
    Stimulus,
    VERDICT_PASSED,
    evaluate,
    plan_trials,
    simulate_subject,
)
from ..render.imageio import write_ppm
from ..render.presets import cornell_box
from ..render.scene import RenderConfig
from ..render.tracer import render
from .store import SessionStore, StimulusManifest, save_manifest


def run_selftest(
    out_dir: str | Path,
    trials: int = 8,
    seed: int = 7,
    alpha: float = DEFAULT_ALPHA,
    threshold: float = 0.02,
    observer_accuracy: float | None = None,
    seeds: int | None = None,
    n: int = 64,
    echo=print,
) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if observer_accuracy is not None:
        return _calibration(
            observer_accuracy, seeds or 50, n=n, alpha=alpha, seed=seed, echo=echo
        )
    return _end_to_end(
        out_dir, trials=trials, seed=seed, alpha=alpha, threshold=threshold, echo=echo
    )


def _end_to_end(out_dir: Path, trials: int, seed: int, alpha: float,
                threshold: float, echo) -> dict:
    scene, camera = cornell_box(resolution=(48, 36))
    clean = render(scene, camera, RenderConfig(192, 4, rng_seed=100), workers=1)
    noisy = render(scene, camera, RenderConfig(2, 4, rng_seed=200), workers=1)
    clean_path = out_dir / "stimulus-clean.ppm"
    noisy_path = out_dir / "stimulus-noisy.ppm"
    write_ppm(clean.image, clean_path)
    write_ppm(noisy.image, noisy_path)
    echo(f"rendered stimuli in {clean.wall_seconds + noisy.wall_seconds:.1f}s")

    # The clean frame plays "real"; both reference it, so the observer sees
    # zero difference on real trials and render noise on synthetic ones.
    manifest = StimulusManifest(
        root=out_dir,
        entries=(
            Stimulus(
                id="stim-a",
                kind="real",
                image_path=clean_path,
                provenance="clean render standing in for a photograph",
                reference_path=clean_path,
            ),
            Stimulus(
                id="stim-b",
                kind="synthetic",
                image_path=noisy_path,
                provenance="low-sample render",
                reference_path=clean_path,
            ),
        ),
    )
    save_manifest(manifest, out_dir / "manifest.json")

    log_dir = out_dir / "sessions"
    store = SessionStore(log_dir, manifest=manifest, alpha=alpha)
    record = store.create_session(n=trials, seed=seed)
    sid = record.plan.session_id
    echo(f"session {sid}: {trials} trials planned")

    observer = SimulatedObserver(difference_threshold=threshold)
    shadow = simulate_subject(observer, record.plan, list(manifest.entries))
    for k in range(trials):
        store.record_response(sid, k, shadow.responses[k].choice)
    result = store.result(sid)
    result_json = json.dumps(result.to_json_dict(), sort_keys=True)
    echo(
        f"observer answered {result.k_correct}/{result.n} correctly; "
        f"p = {result.p_value:.6g}; verdict {result.verdict}"
    )
    echo(f"note: PASSED means {EPISTEMIC_CAVEAT}")

    replayed_store = SessionStore(log_dir, manifest=manifest, alpha=alpha)
    replayed = replayed_store.result(sid)
    replay_json = json.dumps(replayed.to_json_dict(), sort_keys=True)
    replay_ok = replay_json == result_json
    echo(f"log replay reproduces result: {replay_ok}")

    return {
        "mode": "end_to_end",
        "session_id": sid,
        "result": result.to_json_dict(),
        "replay_identical": replay_ok,
        "ok": replay_ok,
    }


def _calibration(q: float, seeds: int, n: int, alpha: float, seed: int, echo) -> dict:
    pool = [
        Stimulus(id="sim-real", kind="real", image_path=Path("<simulated>")),
        Stimulus(id="sim-synth", kind="synthetic", image_path=Path("<simulated>")),
    ]
    passed = 0
    for i in range(seeds):
        plan = plan_trials(pool, n, seed=seed + 2 * i)
        observer = SimulatedObserver(per_trial_accuracy=q, seed=seed + 2 * i + 1)
        session = simulate_subject(observer, plan, pool)
        result = evaluate(session, pool, alpha=alpha)
        passed += result.verdict == VERDICT_PASSED
    fraction = passed / seeds
    echo(
        f"observer accuracy {q:g}, n={n}, {seeds} seeds: "
        f"PASSED fraction {fraction:.3f} (PASSED = {EPISTEMIC_CAVEAT})"
    )
    return {
        "mode": "calibration",
        "observer_accuracy": q,
        "n": n,
        "seeds": seeds,
        "passed_fraction": fraction,
        "ok": True,
    }
