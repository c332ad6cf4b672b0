"""
Command line interface.

    arrayloc locate recording.wav --geometry array.json > detections.jsonl
    arrayloc simulate --geometry array.json --distance 3 --azimuth 20 -o scene.wav
    arrayloc eval table1 --geometry array.json -o table1.csv

The geometry path falls back to ``$ARRAYLOC_GEOMETRY``. Pipeline settings come
from flags, then ``--config`` (JSON), then defaults.

Exit codes: 0 success, 2 bad input (arguments, files, formats), 3 processing
failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import List, Optional

import numpy as np

from .evaluation import bench, nearfield, table1
from .io import (AudioFormatError, ConfigError, read_geometry_config, read_multichannel_wav,
                 write_csv, write_detections, write_multichannel_wav)
from .pipeline import Localizer, LocalizerConfig
from .simulate import Echo, Scene, position_from_angles, render

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_PROCESSING = 3
GEOMETRY_ENV = "ARRAYLOC_GEOMETRY"

# flag name -> LocalizerConfig field
PIPELINE_FLAGS = {
    "frame_size": ("-N", "--frame-size", int),
    "alpha": (None, "--alpha", float),
    "gamma": (None, "--gamma", float),
    "noise_rate": (None, "--noise-rate", float),
    "num_peaks": ("-M", "--num-peaks", int),
    "tol": (None, "--tol", int),
    "gate_factor": (None, "--gate-factor", float),
}


class InputError(Exception):
    pass


def _add_pipeline_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("pipeline")
    for dest, (short, long, typ) in PIPELINE_FLAGS.items():
        names = [n for n in (short, long) if n]
        g.add_argument(*names, dest=dest, type=typ, default=None)
    g.add_argument("--config", help="JSON file of pipeline settings")
    g.add_argument("--show-config", action="store_true",
                   help="print the effective settings and exit")


def _add_geometry_flag(p: argparse.ArgumentParser):
    p.add_argument("--geometry", "-g", default=None,
                   help=f"array geometry JSON (default: ${GEOMETRY_ENV})")
    p.add_argument("--fs", type=float, default=None,
                   help="sample rate in Hz (overrides the geometry file)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="arrayloc", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("locate", help="localize sources in a multichannel WAV")
    p.add_argument("audio", nargs="?")
    _add_geometry_flag(p)
    _add_pipeline_flags(p)
    p.add_argument("--output", "-o", help="detections file (JSON lines); default stdout")

    p = sub.add_parser("simulate", help="render a synthetic scene to WAV")
    _add_geometry_flag(p)
    p.add_argument("--output", "-o", required=True)
    p.add_argument("--position", nargs=3, type=float, metavar=("X", "Y", "Z"))
    p.add_argument("--distance", type=float, default=3.0)
    p.add_argument("--azimuth", type=float, default=0.0)
    p.add_argument("--elevation", type=float, default=0.0)
    p.add_argument("--signal", default="white", choices=("white", "speech", "tone", "impulse"))
    p.add_argument("--tone-hz", type=float, default=1000.0)
    p.add_argument("--snr", type=float, default=math.inf, help="dB; default noiseless")
    p.add_argument("--echo", nargs=2, type=float, action="append", default=[],
                   metavar=("DELAY_MS", "ATTENUATION"))
    p.add_argument("--duration", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--encoding", default="float32", choices=("float32", "int16"))

    p = sub.add_parser("eval", help="simulated evaluation sweeps (CSV)")
    p.add_argument("mode", choices=("table1", "nearfield", "bench"))
    _add_geometry_flag(p)
    _add_pipeline_flags(p)
    p.add_argument("--snr", type=float, default=15.0)
    p.add_argument("--azimuth-step", type=float, default=30.0)
    p.add_argument("--duration", type=float, default=0.5)
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", "-o", help="CSV path; default stdout")
    return parser


def resolve_config(args) -> LocalizerConfig:
    cfg = LocalizerConfig()
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                doc = json.load(fh)
            cfg = cfg.updated(**doc)
        except (OSError, json.JSONDecodeError, ValueError, TypeError) as exc:
            raise InputError(f"{args.config}: {exc}") from exc
    flags = {k: getattr(args, k, None) for k in PIPELINE_FLAGS}
    try:
        return cfg.updated(**flags)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _geometry_config(args):
    path = args.geometry or os.environ.get(GEOMETRY_ENV)
    if not path:
        raise InputError(f"no geometry given (use --geometry or set ${GEOMETRY_ENV})")
    try:
        return read_geometry_config(path)
    except ConfigError as exc:
        raise InputError(str(exc)) from exc


def _open_out(path):
    return open(path, "w", newline="") if path else sys.stdout


def cmd_locate(args) -> int:
    cfg = resolve_config(args)
    if args.show_config:
        print(json.dumps(cfg.as_dict(), indent=2))
        return EXIT_OK
    if not args.audio:
        raise InputError("locate: missing audio path")
    gcfg = _geometry_config(args)
    try:
        samples, fs = read_multichannel_wav(args.audio)
    except (AudioFormatError, OSError) as exc:
        raise InputError(str(exc)) from exc
    if samples.shape[0] != gcfg.mic_positions.shape[0]:
        raise InputError(f"{args.audio}: {samples.shape[0]} channels but geometry has "
                         f"{gcfg.mic_positions.shape[0]} microphones")
    if args.fs is not None and args.fs != fs:
        raise InputError(f"{args.audio}: file sample rate {fs:g} Hz differs from --fs {args.fs:g}")
    geom = gcfg.build(sample_rate=fs)
    loc = Localizer(geom, cfg)
    frames = detections = 0
    out = _open_out(args.output)
    try:
        for res in loc.run(samples):
            frames += 1
            if res.detected:
                detections += write_detections([res.record()], out)
    finally:
        if out is not sys.stdout:
            out.close()
    print(f"frames={frames} detections={detections} "
          f"mean_frame_ms={1e3 * loc.mean_frame_time:.3f}", file=sys.stderr)
    return EXIT_OK


def cmd_simulate(args) -> int:
    gcfg = _geometry_config(args)
    geom = gcfg.build(sample_rate=args.fs)
    if args.position:
        pos = tuple(args.position)
    else:
        pos = tuple(position_from_angles(args.distance, args.azimuth, args.elevation, geom.center))
    try:
        echoes = tuple(Echo(d, a) for d, a in args.echo)
        scene = Scene(pos, args.signal, args.snr, echoes, seed=args.seed, tone_hz=args.tone_hz)
        x = render(scene, geom, args.duration)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    write_multichannel_wav(args.output, x, geom.sample_rate, args.encoding)
    print(f"wrote {x.shape[0]} channels x {x.shape[1]} samples to {args.output}", file=sys.stderr)
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = resolve_config(args)
    if args.show_config:
        print(json.dumps(cfg.as_dict(), indent=2))
        return EXIT_OK
    geom = _geometry_config(args).build(sample_rate=args.fs)
    out = _open_out(args.output)
    try:
        if args.mode == "table1":
            rows = table1(geom, args.snr, args.azimuth_step, args.duration, seed=args.seed, config=cfg)
            write_csv(out, ["source", "distance_m", "elevation_deg", "reported_error_deg",
                            "mean_error_deg", "detections", "frames"],
                      [("simulated", r.distance, r.elevation, r.reported_error,
                        f"{r.mean_error:.4f}", r.detections, r.frames) for r in rows])
        elif args.mode == "nearfield":
            rows = nearfield(geom, trials=args.trials, seed=args.seed)
            write_csv(out, ["source", "distance_m", "mean_error_deg"],
                      [("simulated", d, f"{e:.4f}") for d, e in rows])
        else:
            b = bench(geom, cfg, duration=max(args.duration, 1.0), seed=args.seed)
            write_csv(out, ["source", "frames", "seconds", "fps", "required_fps", "realtime_factor"],
                      [("simulated", b.frames, f"{b.seconds:.4f}", f"{b.fps:.1f}",
                        f"{b.required_fps:.2f}", f"{b.realtime_factor:.2f}")])
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


COMMANDS = {"locate": cmd_locate, "simulate": cmd_simulate, "eval": cmd_eval}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except BrokenPipeError:
        # downstream closed early (e.g. piped into head)
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK
    except InputError as exc:
        print(f"arrayloc {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"arrayloc {args.command}: processing failed: {exc}", file=sys.stderr)
        return EXIT_PROCESSING


if __name__ == "__main__":
    sys.exit(main())
