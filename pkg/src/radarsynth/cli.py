"""Command-line entry point: ``radarsynth {simulate,metrics,sweep-alpha,demo}``.

Exit codes: 0 success, 1 runtime or domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .assembly import load_sampling_table, read_frames, sample_frame, write_frames
from .config import load_config
from .ingest import load_masks, load_scene, load_skeleton_sequence
from .metrics import MetricError, average_cumulative_error, chamfer, combined_loss, emd
from .pipeline import RadarSynthesizer

log = logging.getLogger("radarsynth")

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2
METRICS = ("chamfer", "emd", "loss", "ace-intensity", "ace-velocity")


class UsageError(Exception):
    pass


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _load_inputs(args):
    sim = load_config(args.config)
    radar = sim.radar if args.seed is None else replace(sim.radar, seed=args.seed)
    skeleton = load_skeleton_sequence(args.skeleton)
    masks = load_masks(args.mask)
    scene = load_scene(args.scene, seed=radar.seed)
    table = None
    key = None
    if sim.sampling_table:
        table_path = Path(sim.sampling_table)
        if not table_path.is_absolute():
            table_path = Path(args.config).parent / table_path
        table = load_sampling_table(table_path)
        raw = json.loads(Path(args.config).read_text()).get("sampling_key")
        key = tuple(raw) if raw else None
    return sim, radar, skeleton, masks, scene, table, key


def _synthesizer(sim, radar, masks, scene, table, key, threads):
    return RadarSynthesizer(
        radar_config=radar,
        camera=sim.camera,
        scene=scene,
        masks=masks,
        sampling_table=table,
        sampling_key=key,
        calibration=sim.calibration,
        n_jobs=threads,
    ).fit()


def cmd_simulate(args) -> int:
    started = _now()
    sim, radar, skeleton, masks, scene, table, key = _load_inputs(args)
    synth = _synthesizer(sim, radar, masks, scene, table, key, args.threads)
    frames = synth.transform(skeleton)
    write_frames(frames, args.out)
    manifest = {
        "tool": "radarsynth",
        "tool_version": __version__,
        "command": "simulate",
        "config": args.config,
        "skeleton": args.skeleton,
        "mask": args.mask,
        "scene": args.scene,
        "out": args.out,
        "seed": radar.seed,
        "threads": args.threads,
        "radar_config": radar.to_dict(),
        "started": started,
        "finished": _now(),
        "counters": synth.counters_.as_dict(),
        "n_frames": len(frames),
    }
    Path(str(args.out) + ".manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    log.info("wrote %d frames to %s", len(frames), args.out)
    return EXIT_OK


def _frame_metric(name, a_frames, b_frames) -> float:
    if len(a_frames) != len(b_frames):
        raise MetricError(f"frame count mismatch: {len(a_frames)} vs {len(b_frames)}")
    if name == "ace-intensity":
        return average_cumulative_error(a_frames, b_frames, "intensity")
    if name == "ace-velocity":
        return average_cumulative_error(a_frames, b_frames, "radial_velocity")
    fn = {"chamfer": chamfer, "emd": emd, "loss": combined_loss}[name]
    values = [fn(fa.xyz, fb.xyz) for fa, fb in zip(a_frames, b_frames)]
    if not values:
        raise MetricError("no frames to compare")
    return float(np.mean(values))


def cmd_metrics(args) -> int:
    a = read_frames(args.a)
    b = read_frames(args.b)
    try:
        value = _frame_metric(args.metric, a, b)
    except MetricError as exc:
        if "equal-size" in str(exc):
            raise UsageError(str(exc)) from exc
        raise
    print(f"{value:.9f}")
    return EXIT_OK


def alpha_grid(start: float, stop: float, step: float) -> list[float]:
    if step <= 0:
        raise UsageError("--step must be positive")
    if stop < start:
        raise UsageError("--to must not be below --from")
    n = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(n)]


def cmd_sweep_alpha(args) -> int:
    alphas = alpha_grid(args.start, args.stop, args.step)
    sim, radar, skeleton, masks, scene, table, key = _load_inputs(args)
    reference = read_frames(args.reference) if args.reference else None
    synth = _synthesizer(sim, radar, masks, scene, table, key, args.threads)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["alpha", "surviving_paths", "mean_intensity_db", "ace_intensity", "ace_velocity"])
    for alpha in alphas:
        frames = synth.transform(skeleton, cfg=radar.with_alpha(alpha))
        inten = np.concatenate([f.intensity for f in frames]) if frames else np.zeros(0)
        mean_db = float(inten.mean()) if inten.size else float("nan")
        row = [f"{alpha:g}", synth.counters_.surviving_paths, f"{mean_db:.9g}"]
        if reference is not None:
            row.append(f"{average_cumulative_error(frames, reference, 'intensity'):.9g}")
            row.append(f"{average_cumulative_error(frames, reference, 'radial_velocity'):.9g}")
        else:
            row.extend(["", ""])
        writer.writerow(row)
    if args.out:
        Path(args.out).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_demo(args) -> int:
    from .fixtures import write_demo, write_reference

    paths = write_demo(args.dir)
    paths["reference"] = write_reference(args.dir)
    for name, path in paths.items():
        print(f"{name}: {path}")
    return EXIT_OK


def cmd_fps(args) -> int:
    frames = read_frames(args.input)
    write_frames([sample_frame(f, args.target) for f in frames], args.out)
    return EXIT_OK


def _add_pipeline_flags(p):
    p.add_argument("--config", required=True, help="simulation config (JSON)")
    p.add_argument("--skeleton", required=True, help="skeleton sequence (JSON Lines)")
    p.add_argument("--mask", required=True, help="body-part mask file")
    p.add_argument("--scene", required=True, help="scene file")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--threads", type=int, default=1, help="worker threads for the per-frame pass")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="radarsynth", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run the full pipeline")
    _add_pipeline_flags(p)
    p.add_argument("--out", required=True, help="output radar frame file")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("metrics", help="compare two radar frame files")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--metric", required=True, choices=METRICS)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("sweep-alpha", help="simulate over a range of attenuation coefficients")
    _add_pipeline_flags(p)
    p.add_argument("--from", dest="start", type=float, default=0.0)
    p.add_argument("--to", dest="stop", type=float, default=0.3)
    p.add_argument("--step", type=float, default=0.05)
    p.add_argument("--reference", default=None, help="reference radar frame file for ACE columns")
    p.add_argument("--out", default=None, help="CSV table path (default: stdout)")
    p.set_defaults(func=cmd_sweep_alpha)

    p = sub.add_parser("fps", help="downsample every frame of a radar frame file")
    p.add_argument("--input", required=True)
    p.add_argument("--target", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fps)

    p = sub.add_parser("demo", help="write the bundled demo fixtures")
    p.add_argument("--dir", required=True)
    p.set_defaults(func=cmd_demo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "threads", 1) is not None and getattr(args, "threads", 1) < 1:
        print("radarsynth: error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"radarsynth: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, RuntimeError, KeyError) as exc:
        print(f"radarsynth: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
