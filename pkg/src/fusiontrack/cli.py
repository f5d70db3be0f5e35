"""Command-line entry point: ``simulate``, ``track``, ``evaluate``, ``fuse-stats``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from . import tensor_core as tc
from .cmdf import CmdfConfig, CmdfNets, cmdf_forward
from .config import ConfigError, build, read_key_values, split_keys
from .metrics import evaluate, feature_stats, format_csv, format_feature_stats, format_table
from .motio import (MotFormatError, parse_mot_detections, parse_mot_ground_truth, parse_mot_results,
                    write_mot_detections, write_mot_ground_truth, write_mot_results)
from .params import ParamStore, save_feature_map
from .refiner import RefinerConfig, RefinerNet, refiner_forward
from .simulator import CorruptionModel, ScenarioSpec, corrupt_detections, generate_scenario
from .synthetic import cluttered_pair, peaked_cmdf_nets, peaked_refiner
from .tracker import TrackerConfig, run_tracker


@dataclass
class RunManifest:
    command: str
    inputs: list[str]
    config: str | None
    seed: int | None
    output_dir: str
    tool_version: str = __version__
    settings: dict = field(default_factory=dict)

    def write(self, out: Path) -> None:
        text = json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"
        (out / f"{self.command}.manifest.json").write_text(text, encoding="utf-8")


@dataclass(frozen=True)
class FuseSettings:
    channels: int = 4
    height: int = 32
    width: int = 32
    cmdf_steps: int = 3
    cmdf_sigma: float = 0.1
    refiner_steps: int = 3
    refiner_sigma: float = 0.1
    alpha: float = 0.5
    time_dim: int = 32
    total_steps: int = 1000


def _out_dir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None


def _jsonable(obj) -> dict:
    return json.loads(json.dumps(asdict(obj), default=str))


def cmd_simulate(args) -> int:
    values = read_key_values(args.config)
    source = args.config or "<config>"
    spec_vals, model_vals = split_keys(values, ScenarioSpec, CorruptionModel, source=source)
    spec = build(ScenarioSpec, spec_vals, source, seed=args.seed)
    model = build(CorruptionModel, model_vals, source, seed=tc.derive_seed(spec.seed, 7))
    gt = generate_scenario(spec)
    dets = corrupt_detections(gt, model, spec.arena)
    out = _out_dir(args.out)
    (out / "gt.txt").write_text(write_mot_ground_truth(gt), encoding="utf-8")
    (out / "det.txt").write_text(write_mot_detections(dets), encoding="utf-8")
    RunManifest("simulate", [], args.config, spec.seed, str(args.out),
                settings={"scenario": _jsonable(spec), "corruption": _jsonable(model)}).write(out)
    print(f"wrote {out / 'gt.txt'} and {out / 'det.txt'} ({spec.num_frames} frames)")
    return 0


def cmd_track(args) -> int:
    source = args.config or "<config>"
    cfg = build(TrackerConfig, read_key_values(args.config), source)
    dets = parse_mot_detections(_read(args.detections))
    frames = range(min(dets, default=1), max(dets, default=0) + 1)
    tracks = run_tracker(dets, cfg, frames)
    out = _out_dir(args.out)
    (out / "results.txt").write_text(write_mot_results(tracks, args.emit_coasted), encoding="utf-8")
    RunManifest("track", [args.detections], args.config, None, str(args.out),
                settings={"tracker": _jsonable(cfg), "emit_coasted": args.emit_coasted}).write(out)
    print(f"wrote {out / 'results.txt'}")
    return 0


def cmd_evaluate(args) -> int:
    if not 0.0 < args.iou_threshold < 1.0:
        raise ConfigError("--iou-threshold must lie in (0, 1)")
    gt = parse_mot_ground_truth(_read(args.gt))
    hyp = parse_mot_results(_read(args.results))
    report = evaluate(gt, hyp, args.iou_threshold)
    table = format_table({Path(args.results).stem: report})
    sys.stdout.write(table)
    if args.out:
        out = _out_dir(args.out)
        (out / "metrics.txt").write_text(table, encoding="utf-8")
        (out / "metrics.csv").write_text(format_csv(report), encoding="utf-8")
        RunManifest("evaluate", [args.gt, args.results], None, None, str(args.out),
                    settings={"iou_threshold": args.iou_threshold}).write(out)
    return 0


def cmd_fuse_stats(args) -> int:
    source = args.config or "<config>"
    s = build(FuseSettings, read_key_values(args.config), source)
    seed = 0 if args.seed is None else args.seed
    rcfg = RefinerConfig(steps=s.refiner_steps, total_steps=s.total_steps, sigma=s.refiner_sigma,
                         alpha=s.alpha, time_dim=s.time_dim, seed=tc.derive_seed(seed, 2))
    ccfg = CmdfConfig(steps=s.cmdf_steps, sigma=s.cmdf_sigma, base_seed=tc.derive_seed(seed, 1))
    if args.params:
        store = ParamStore.load(args.params)
        nets = CmdfNets.from_store(store, s.channels)
        refiner = RefinerNet.from_store(store, s.channels, s.refiner_steps, s.time_dim)
    else:
        nets = peaked_cmdf_nets(s.channels)
        refiner = peaked_refiner(s.channels, rcfg)
    x_rgb, x_t = cluttered_pair(s.channels, s.height, s.width, seed=seed)
    fused = cmdf_forward(x_rgb, x_t, nets, ccfg)
    enhanced = refiner_forward(fused, refiner, rcfg)
    stats = {
        "concat": feature_stats(tc.concat_channels(x_rgb, x_t)),
        "fused": feature_stats(fused),
        "fused+refined": feature_stats(enhanced),
    }
    table = format_feature_stats(stats)
    sys.stdout.write(table)
    out = _out_dir(args.out)
    save_feature_map(out / "fused.params", "fused", enhanced)
    (out / "stats.txt").write_text(table, encoding="utf-8")
    RunManifest("fuse-stats", [args.params] if args.params else [], args.config, seed, str(args.out),
                settings=_jsonable(s)).write(out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fusiontrack", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate gt.txt and det.txt for a synthetic scene")
    sim.add_argument("--config")
    sim.add_argument("--seed", type=int)
    sim.add_argument("--out", default=".")
    sim.set_defaults(func=cmd_simulate)

    trk = sub.add_parser("track", help="run the tracker over a detection file")
    trk.add_argument("detections")
    trk.add_argument("--config")
    trk.add_argument("--out", default=".")
    trk.add_argument("--emit-coasted", action="store_true",
                     help="also write boxes of tracks that had no detection this frame")
    trk.set_defaults(func=cmd_track)

    ev = sub.add_parser("evaluate", help="score a results file against ground truth")
    ev.add_argument("gt")
    ev.add_argument("results")
    ev.add_argument("--iou-threshold", type=float, default=0.5)
    ev.add_argument("--out")
    ev.set_defaults(func=cmd_evaluate)

    fs = sub.add_parser("fuse-stats", help="fuse two synthetic modality maps and report statistics")
    fs.add_argument("--config")
    fs.add_argument("--seed", type=int)
    fs.add_argument("--params", help="weights file with cmdf.* and refiner.* tensors")
    fs.add_argument("--out", default=".")
    fs.set_defaults(func=cmd_fuse_stats)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, MotFormatError, KeyError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"fusiontrack {args.command}: error: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
