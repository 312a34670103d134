"""Command-line entry point.

Exit codes: 0 success, 1 user error (bad flags, bad input, empty logs),
2 internal error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
import traceback
from pathlib import Path

from .. import __version__
from ..distsim import (
    decompose,
    gts_verdict,
    load_catalog,
    sim_record,
    simulate_frame,
    sweep,
    sweep_csv,
)
from ..errors import UserError
from ..protocol import EPISTEMIC_CAVEAT
from ..scale import (
    CpuDescriptor,
    TargetInteractivity,
    WorkloadMeasurement,
    extrapolate,
    scale_record,
    scale_report,
)
from ..render.imageio import write_png, write_ppm
from ..render.presets import PRESETS, preset
from ..render.scene import RenderConfig, load_scene
from ..render.tracer import measure_frame_time, render
from .selftest import run_selftest
from .service import ServiceConfig, run_service
from .store import analyze_log_dir

LOG_DIR_ENV = "GTLAB_LOG_DIR"


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as UserError (exit code 1)."""

    def error(self, message):
        raise UserError(f"{message}\n{self.format_usage().rstrip()}")


def _resolution(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except Exception as exc:
        raise UserError(f"resolution must look like 64x64, got {text!r}") from exc


def _load_scene_arg(name: str, resolution: tuple[int, int] | None):
    if name in PRESETS:
        return preset(name, resolution)
    path = Path(name)
    if not path.exists():
        raise UserError(
            f"{name!r} is neither a preset ({', '.join(sorted(PRESETS))}) "
            "nor a scene file"
        )
    scene, camera = load_scene(path)
    if resolution is not None:
        camera.resolution = resolution
    return scene, camera


def _default_log_dir() -> Path:
    return Path(os.environ.get(LOG_DIR_ENV, "sessions"))


def build_parser() -> _Parser:
    parser = _Parser(prog="gtlab", description=__doc__)
    parser.add_argument("--version", action="version", version=f"gtlab {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("render", help="render a scene to PPM/PNG")
    p.add_argument("--scene", required=True, help="preset name or scene JSON path")
    p.add_argument("--resolution", type=_resolution, default=None, help="WxH override")
    p.add_argument("--spp", type=int, default=64, help="samples per pixel")
    p.add_argument("--depth", type=int, default=8, help="max path depth")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, help="output PPM path")
    p.add_argument("--png", default=None, help="also write a PNG here")
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("measure",
                       help="time single-worker frames and report the median")
    p.add_argument("--scene", required=True)
    p.add_argument("--resolution", type=_resolution, default=None)
    p.add_argument("--spp", type=int, default=64)
    p.add_argument("--depth", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repetitions", type=int, default=3)
    p.add_argument("--gflops", type=float, required=True,
                   help="assumed GFlops of this machine")
    p.add_argument("--cpu-name", default="local CPU")
    p.add_argument("--clock-ghz", type=float, default=None,
                   help="defaults to gflops/2 (2 flops per cycle)")
    p.set_defaults(func=_cmd_measure)

    p = sub.add_parser("scale",
                       help="extrapolate frame time to required parallel compute")
    p.add_argument("--seconds-per-frame", type=float, required=True)
    p.add_argument("--fps", type=float, default=30.0)
    p.add_argument("--gflops", type=float, required=True)
    p.add_argument("--efficiency", type=float, default=0.5)
    p.add_argument("--cpu-name", default="reference CPU")
    p.add_argument("--clock-ghz", type=float, default=None)
    p.add_argument("--record", default=None, help="write machine-readable JSON here")
    p.add_argument("--json", action="store_true", help="print the JSON record instead")
    p.add_argument("--compare-catalog", action="store_true",
                   help="compare the requirement against the archetype catalog")
    p.set_defaults(func=_cmd_scale)

    p = sub.add_parser("simulate",
                       help="simulate one frame on a machine archetype")
    _add_sim_args(p)
    p.add_argument("--target-fps", type=float, default=None,
                   help="also judge pass/fail against this frame rate")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("sweep",
                       help="sweep one simulator parameter, emit CSV")
    _add_sim_args(p)
    p.add_argument("--param", required=True,
                   choices=("latency", "node_count", "tile_count"))
    p.add_argument("--grid", required=True, help="comma-separated values")
    p.add_argument("--out", default=None, help="CSV path (default stdout)")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("serve",
                       help="serve live test sessions over HTTP")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8788)
    p.add_argument("--manifest", required=True)
    p.add_argument("--log-dir", default=None,
                   help=f"default: ${LOG_DIR_ENV} or ./sessions")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--default-n", type=int, default=64)
    p.add_argument("--static-dir", default=None, help="UI asset directory")
    p.add_argument("--catalog", default=None, help="archetype catalog override")
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("analyze",
                       help="recompute results from session logs alone")
    p.add_argument("--log-dir", default=None)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--session", default=None, help="only this session id")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("selftest",
                       help="render, test, evaluate, and replay end to end")
    p.add_argument("--out-dir", default=None)
    p.add_argument("--trials", type=int, default=8)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--threshold", type=float, default=0.02)
    p.add_argument("--observer-accuracy", type=float, default=None,
                   help="switch to calibration mode at this accuracy")
    p.add_argument("--seeds", type=int, default=None,
                   help="calibration repetitions (default 50)")
    p.add_argument("--n", type=int, default=64, help="calibration trials per run")
    p.set_defaults(func=_cmd_selftest)

    return parser


def _add_sim_args(p: _Parser) -> None:
    p.add_argument("--arch", required=True, help="archetype name from the catalog")
    p.add_argument("--catalog", default=None, help="catalog JSON override")
    p.add_argument("--work-seconds", type=float, required=True,
                   help="frame cost on the reference CPU")
    p.add_argument("--ref-gflops", type=float, default=4.8)
    p.add_argument("--tiles", type=int, default=256)
    p.add_argument("--bytes-per-tile", type=float, default=65536.0)
    p.add_argument("--broadcast-bytes", type=float, default=0.0,
                   help="geometry sent to every worker before compute starts")
    p.add_argument("--strategy", choices=("uniform", "weighted"), default="uniform")
    p.add_argument("--fractions", default=None, help="comma-separated tile fractions")


def _cmd_render(args) -> int:
    scene, camera = _load_scene_arg(args.scene, args.resolution)
    config = RenderConfig(args.spp, args.depth, rng_seed=args.seed)
    result = render(scene, camera, config, workers=args.workers)
    write_ppm(result.image, args.out)
    print(f"wrote {args.out} ({camera.resolution[0]}x{camera.resolution[1]}, "
          f"{args.spp} spp) in {result.wall_seconds:.2f}s")
    if args.png:
        write_png(result.image, args.png)
        print(f"wrote {args.png}")
    return 0


def _cmd_measure(args) -> int:
    scene, camera = _load_scene_arg(args.scene, args.resolution)
    config = RenderConfig(args.spp, args.depth, rng_seed=args.seed)
    cpu = CpuDescriptor(
        name=args.cpu_name,
        clock_ghz=args.clock_ghz if args.clock_ghz else args.gflops / 2.0,
        gflops=args.gflops,
    )
    ft = measure_frame_time(scene, camera, config, args.repetitions, reference=cpu)
    print(json.dumps({
        "record_format": 1,
        "command": "measure",
        "inputs": {
            "scene": args.scene,
            "samples_per_pixel": args.spp,
            "max_path_depth": args.depth,
            "repetitions": args.repetitions,
        },
        "results": {
            "seconds_per_frame": ft.seconds_per_frame,
            "samples": list(ft.samples),
            "reference": {"name": cpu.name, "clock_ghz": cpu.clock_ghz,
                          "gflops": cpu.gflops},
        },
    }, indent=2, sort_keys=True))
    return 0


def _cmd_scale(args) -> int:
    cpu = CpuDescriptor(
        name=args.cpu_name,
        clock_ghz=args.clock_ghz if args.clock_ghz else args.gflops / 2.0,
        gflops=args.gflops,
    )
    estimate = extrapolate(
        WorkloadMeasurement(args.seconds_per_frame, cpu),
        TargetInteractivity(args.fps),
        efficiency=args.efficiency,
        per_cpu=cpu,
    )
    record = scale_record(estimate)
    if args.json:
        print(json.dumps(record, indent=2, sort_keys=True))
    else:
        print(scale_report(estimate))
        if args.compare_catalog:
            print(_catalog_comparison(estimate))
    if args.record:
        Path(args.record).write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
    return 0


def _catalog_comparison(estimate) -> str:
    """Sustained-throughput comparison of every catalog machine.

    Machines with a published sustained figure are compared on it; otherwise
    sustained is taken as peak times the requested efficiency.  A machine
    sometimes described as sufficient can land on the fail side here; the
    margin column makes the disagreement explicit instead of resolving it.
    """
    from types import SimpleNamespace

    from ..distsim import load_catalog
    from ..scale import passes_threshold

    lines = [
        f"catalog comparison (sustained TFlops vs required "
        f"{estimate.sustained_tflops:g}):"
    ]
    for name, arch in sorted(load_catalog().items()):
        published = arch.metadata.get("published_sustained_tflops")
        if published is not None:
            sustained = published
            source = "published sustained"
        else:
            sustained = arch.peak_tflops * estimate.efficiency
            source = f"peak x efficiency {estimate.efficiency:g}"
        verdict = passes_threshold(
            SimpleNamespace(peak_tflops=arch.peak_tflops, sustained_tflops=sustained),
            estimate,
        )
        lines.append(
            f"  {name:<15} {sustained:>10.4g} ({source:<26}) -> "
            f"{'pass' if verdict.passed else 'fail'} "
            f"(margin {verdict.margin_tflops:+.4g})"
        )
    return "\n".join(lines)


def _sim_setup(args):
    catalog = load_catalog(args.catalog)
    if args.arch not in catalog:
        raise UserError(
            f"unknown archetype {args.arch!r}; available: {', '.join(sorted(catalog))}"
        )
    arch = catalog[args.arch]
    fractions = (
        [float(f) for f in args.fractions.split(",")] if args.fractions else None
    )
    job = decompose(
        args.work_seconds,
        args.tiles,
        strategy=args.strategy,
        fractions=fractions,
        bytes_per_tile_result=args.bytes_per_tile,
        scene_broadcast_bytes=args.broadcast_bytes,
    )
    return arch, job


def _cmd_simulate(args) -> int:
    arch, job = _sim_setup(args)
    result = simulate_frame(arch, job, args.ref_gflops)
    record = sim_record(arch, job, args.ref_gflops, result)
    if args.target_fps is not None:
        cpu = CpuDescriptor("reference", clock_ghz=args.ref_gflops / 2.0,
                            gflops=args.ref_gflops)
        required = extrapolate(
            WorkloadMeasurement(args.work_seconds, cpu),
            TargetInteractivity(args.target_fps),
            per_cpu=cpu,
        )
        verdict = gts_verdict(arch, required, result)
        record["verdict"] = {
            "passed": verdict.passed,
            "reasons": list(verdict.reasons),
            "target_fps": args.target_fps,
        }
    if args.json:
        print(json.dumps(record, indent=2, sort_keys=True))
    else:
        r = record["results"]
        print(f"{arch.name}: frame {r['frame_time_s']:.6g}s "
              f"({r['achieved_fps']:.6g} fps), peak {r['peak_tflops']:.6g} TFlops, "
              f"sustained {r['sustained_tflops']:.6g} TFlops, "
              f"efficiency {r['efficiency']:.4f}")
        if "verdict" in record:
            v = record["verdict"]
            print(f"verdict: {'pass' if v['passed'] else 'fail'}"
                  + (f" ({'; '.join(v['reasons'])})" if v["reasons"] else ""))
    return 0


def _cmd_sweep(args) -> int:
    arch, job = _sim_setup(args)
    try:
        grid = [float(v) for v in args.grid.split(",") if v.strip()]
    except ValueError as exc:
        raise UserError(f"bad grid: {exc}") from exc
    rows = sweep(arch, job, args.param, grid, args.ref_gflops)
    csv_text = sweep_csv(rows)
    for row in rows:
        if row.error:
            print(f"warning: {args.param}={row.value!r}: {row.error}", file=sys.stderr)
    if args.out:
        Path(args.out).write_text(csv_text)
        print(f"wrote {args.out} ({len(rows)} rows)")
    else:
        sys.stdout.write(csv_text)
    return 0


def _cmd_serve(args) -> int:
    log_dir = Path(args.log_dir) if args.log_dir else _default_log_dir()
    config = ServiceConfig(
        host=args.host,
        port=args.port,
        manifest_path=Path(args.manifest),
        log_dir=log_dir,
        alpha=args.alpha,
        default_n=args.default_n,
        static_dir=Path(args.static_dir) if args.static_dir else None,
        catalog_path=Path(args.catalog) if args.catalog else None,
    )
    run_service(config)
    return 0


def _cmd_analyze(args) -> int:
    log_dir = Path(args.log_dir) if args.log_dir else _default_log_dir()
    results = analyze_log_dir(log_dir, alpha=args.alpha)
    if args.session:
        results = [r for r in results if r["session_id"] == args.session]
    if not results:
        raise UserError(f"no sessions in {log_dir}")
    for r in results:
        print(json.dumps(r, sort_keys=True))
    print(f"# verdict PASSED = {EPISTEMIC_CAVEAT}", file=sys.stderr)
    return 0


def _cmd_selftest(args) -> int:
    out_dir = args.out_dir or tempfile.mkdtemp(prefix="gtlab-selftest-")
    summary = run_selftest(
        out_dir,
        trials=args.trials,
        seed=args.seed,
        alpha=args.alpha,
        threshold=args.threshold,
        observer_accuracy=args.observer_accuracy,
        seeds=args.seeds,
        n=args.n,
    )
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0 if summary.get("ok") else 2


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            raise UserError(parser.format_usage().rstrip())
        return args.func(args)
    except UserError as exc:
        print(f"gtlab: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"gtlab: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 130
    except Exception:  # noqa: BLE001 -- internal failure
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
