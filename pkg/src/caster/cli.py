"""Command line interface.

  caster simulate --motion clip.json --out outdir [--config cfg.json]
  caster batch    --motion-dir dir --out outdir [--config cfg.json]
  caster synth    --kind push_pull --out dir [--count N --seed S]
  caster inspect  path [path ...]

Without --config the stock 60.48 GHz desk scenario is used.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import dsp, runner
from .errors import CasterError
from .motion import MOTION_FORMAT, load_motion, save_motion


def _load_config(args) -> runner.RunConfig:
    cfg = runner.load_config(args.config) if args.config else runner.default_config()
    if getattr(args, "seed", None) is not None:
        cfg.master_seed = args.seed
    if getattr(args, "clutter_mode", None):
        cfg.clutter_mode = args.clutter_mode
    if getattr(args, "workers", None):
        cfg.workers = args.workers
    return cfg


def _cmd_simulate(args) -> int:
    cfg = _load_config(args)
    clip = load_motion(args.motion)
    stem = args.stem or Path(args.motion).stem
    res = runner.run_clip(clip, cfg, seed=cfg.master_seed, out_dir=args.out,
                          stem=stem)
    spec = res.spectrogram
    print(f"clip '{res.label}': {res.n_frames} frames "
          f"({len(res.bad_frames)} in-filled), "
          f"{res.sequence.n_snapshots} snapshots")
    print(f"spectrogram {spec.magnitude_db.shape[0]}x{spec.magnitude_db.shape[1]}, "
          f"doppler {spec.frequency_axis[0]:+.0f}..{spec.frequency_axis[-1]:+.0f} Hz")
    for kind, name in res.outputs.items():
        print(f"wrote {kind}: {Path(args.out) / name}")
    return 0


def _cmd_batch(args) -> int:
    cfg = _load_config(args)
    paths = sorted(Path(args.motion_dir).glob("*.json"))
    if not paths:
        print(f"no motion files in {args.motion_dir}", file=sys.stderr)
        return 1
    clips = [(p.stem, load_motion(p)) for p in paths]
    manifest = runner.run_batch(clips, cfg, args.out)
    n_ok = sum(1 for e in manifest["entries"] if e["status"] == "ok")
    print(f"{n_ok}/{len(manifest['entries'])} clips ok, "
          f"manifest: {Path(args.out) / 'manifest.json'}")
    return 0 if n_ok else 1


def _cmd_synth(args) -> int:
    out = Path(args.out)
    if args.count > 1 or out.is_dir() or out.suffix != ".json":
        out.mkdir(parents=True, exist_ok=True)
        paths = [out / f"{args.label or args.kind}_{i:03d}.json"
                 for i in range(args.count)]
        seeds = [None if args.seed is None else args.seed + i
                 for i in range(args.count)]
    else:
        paths = [out]
        seeds = [args.seed]
    for path, seed in zip(paths, seeds):
        clip = runner.synth_gesture(
            args.kind, args.duration, args.fps, label=args.label,
            seed=seed, speed=args.speed)
        save_motion(clip, path)
        print(f"wrote {path}")
    return 0


def _inspect_one(path: Path) -> None:
    if path.suffix == ".cstr":
        mat, f_min, f_max, t_step = dsp.read_cstr(path)
        print(f"{path}: CSTR v1, {mat.shape[0]} freq bins x {mat.shape[1]} cols, "
              f"{f_min:+.1f}..{f_max:+.1f} Hz, dt {t_step * 1e3:.2f} ms, "
              f"peak {mat.max():.1f} dB")
        return
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    fmt = doc.get("format", "unknown")
    if fmt == MOTION_FORMAT:
        clip = load_motion(path)
        n_miss = int(np.sum(clip.missing))
        print(f"{path}: {fmt}, label '{clip.label}', {clip.n_frames} frames "
              f"@ {clip.fps:.3g} fps ({n_miss} missing)")
    elif fmt == runner.MANIFEST_FORMAT:
        entries = doc.get("entries", [])
        n_ok = sum(1 for e in entries if e.get("status") == "ok")
        print(f"{path}: {fmt}, {n_ok}/{len(entries)} clips ok, "
              f"seed {doc.get('master_seed')}, "
              f"config digest {doc.get('config_digest', '')[:12]}...")
    elif fmt == runner.CONFIG_FORMAT:
        cfg = runner.config_from_dict(doc)
        print(f"{path}: {fmt}, f_c {cfg.scenario.carrier_frequency / 1e9:.2f} GHz, "
              f"{len(cfg.scenario.scatterers)} scatterers, "
              f"snapshot rate {cfg.snapshot_rate:.0f} Hz, "
              f"digest {cfg.digest()[:12]}...")
    else:
        print(f"{path}: unrecognized format {fmt!r}")


def _cmd_inspect(args) -> int:
    for path in args.paths:
        _inspect_one(Path(path))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="caster",
        description="Simulate gesture channel responses and Doppler spectrograms")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one motion clip end to end")
    p.add_argument("--motion", required=True, help="caster-motion/1 file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", help="caster-scenario/1 file")
    p.add_argument("--seed", type=int, help="override master seed")
    p.add_argument("--clutter-mode", choices=dsp.CLUTTER_MODES)
    p.add_argument("--stem", help="output file stem (default: motion file stem)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("batch", help="run every motion clip in a directory")
    p.add_argument("--motion-dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="caster-scenario/1 file")
    p.add_argument("--seed", type=int, help="override master seed")
    p.add_argument("--clutter-mode", choices=dsp.CLUTTER_MODES)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=_cmd_batch)

    p = sub.add_parser("synth", help="emit synthetic gesture fixture clips")
    p.add_argument("--kind", required=True, choices=runner.GESTURE_KINDS)
    p.add_argument("--out", required=True,
                   help="output .json file, or directory with --count")
    p.add_argument("--duration", type=float, default=1.0, help="seconds")
    p.add_argument("--fps", type=float, default=30.0)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, help="jitter parameters per clip")
    p.add_argument("--label", help="gesture label (default: kind)")
    p.add_argument("--speed", type=float, default=1.0,
                   help="radial speed for single_point_radial, m/s")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("inspect", help="summarize manifest/motion/config/CSTR files")
    p.add_argument("paths", nargs="+")
    p.set_defaults(func=_cmd_inspect)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CasterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
