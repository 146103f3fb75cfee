"""Command-line entry point.

Subcommands map onto the library's stages so a whole experiment is a few
shell lines:

  euphrates synth     --out frames/ --canvas 192x144 --object 64x48 \
                      --frames 60 --velocity 2,1
  euphrates estimate  --frames frames/ --out mv/
  euphrates simulate  --config run.json --mode ew:4 --out sim/
  euphrates evaluate  --trace sim/trace.jsonl --truth frames/truth.jsonl --out eval/
  euphrates sweep     --config run.json --axis ew --values 1,2,4,8 --out sweep/

Configuration lives in JSON files; flags override config fields. Every
output embeds the effective configuration and the tool version, so a run
can be reproduced byte-exactly from any of its outputs. Output paths are
not part of the echoed config.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from .errors import ConfigError, EuphratesError, MissingDataError
from .metrics import DEFAULT_THRESHOLDS, average_precision, success_curve
from .motion import MotionParams, decode_metadata, encode_metadata, estimate_motion_field
from .pixels import SyntheticSpec, generate_sequence, load_sequence, save_sequence
from .roi import Roi
from .scheduler import (
    PipelineConfig,
    ResultTrace,
    TraceProvider,
    read_detection_trace,
    run_pipeline,
)
from .socmodel import SocConfig, summarize

THREADS_ENV = "EUPHRATES_THREADS"


def _max_workers(n_tasks: int) -> int:
    cap = os.environ.get(THREADS_ENV)
    if cap is not None:
        try:
            cap_n = max(1, int(cap))
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {cap!r}") from None
    else:
        cap_n = os.cpu_count() or 1
    return max(1, min(n_tasks, cap_n))


def _parse_pair(text: str, what: str) -> tuple[int, int]:
    sep = "x" if "x" in text else ","
    parts = text.split(sep)
    if len(parts) != 2:
        raise ConfigError(f"cannot parse {what} {text!r}, expected two integers")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        raise ConfigError(f"cannot parse {what} {text!r}, expected two integers") from None


# ---------------------------------------------------------------------------
# Run configuration


def _default_run_config() -> dict:
    return {
        "frames_dir": None,
        "metadata_dir": None,
        "detections": None,
        "truth": None,
        "mode": "ew:4",
        "motion": {"mb_size": 16, "search_range": 7, "algorithm": "es"},
        "extrapolation": {"grid": [2, 2], "filter_threshold": 0.7},
        "adaptive": {"tau_diff": 0.2, "k_up": 3, "ew_min": 1, "ew_max": 32, "initial_ew": 1},
        "provider": {"noise_sigma": 0.0, "seed": None},  # None: use top-level seed
        "soc": {},
        "seed": 0,
    }


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def build_run_config(config_path: str | None, args: argparse.Namespace | None = None) -> dict:
    """Effective run configuration: defaults <- config file <- flags."""
    cfg = _default_run_config()
    if config_path:
        p = Path(config_path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        try:
            loaded = json.loads(p.read_text())
        except json.JSONDecodeError as e:
            raise ConfigError(f"{p}: invalid JSON: {e}") from None
        unknown = set(loaded) - set(cfg)
        if unknown:
            raise ConfigError(f"{p}: unknown config keys: {sorted(unknown)}")
        cfg = _merge(cfg, loaded)
    if args is not None:
        if getattr(args, "mode", None):
            cfg["mode"] = args.mode
        if getattr(args, "mb_size", None):
            cfg["motion"]["mb_size"] = args.mb_size
        if getattr(args, "search_range", None):
            cfg["motion"]["search_range"] = args.search_range
        if getattr(args, "algo", None):
            cfg["motion"]["algorithm"] = args.algo
        if getattr(args, "seed", None) is not None:
            cfg["seed"] = args.seed
        if getattr(args, "frames", None):
            cfg["frames_dir"] = args.frames
        if getattr(args, "detections", None):
            cfg["detections"] = args.detections
    # Echo the full SoC config with every default resolved.
    cfg["soc"] = SocConfig.from_dict(cfg["soc"]).to_dict()
    return cfg


def _motion_params(cfg: dict) -> MotionParams:
    m = cfg["motion"]
    try:
        return MotionParams(int(m["mb_size"]), int(m["search_range"]), m["algorithm"])
    except ValueError as e:
        raise ConfigError(str(e)) from None


def _pipeline_config(cfg: dict) -> PipelineConfig:
    ex = cfg["extrapolation"]
    ad = cfg["adaptive"]
    return PipelineConfig(
        mode=cfg["mode"],
        motion=_motion_params(cfg),
        sub_roi_grid=(int(ex["grid"][0]), int(ex["grid"][1])),
        filter_threshold=float(ex["filter_threshold"]),
        tau_diff=float(ad["tau_diff"]),
        k_up=int(ad["k_up"]),
        ew_min=int(ad["ew_min"]),
        ew_max=int(ad["ew_max"]),
        initial_ew=int(ad["initial_ew"]),
    )


def _echo_header(cfg: dict) -> str:
    return json.dumps({"config": cfg, "version": __version__}, sort_keys=True)


def _write_csv(path: Path, cfg: dict, header: list[str], rows: list[tuple]) -> None:
    buf = io.StringIO()
    buf.write("# " + _echo_header(cfg) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    path.write_text(buf.getvalue())


# ---------------------------------------------------------------------------
# Subcommands


def cmd_synth(args: argparse.Namespace) -> int:
    if args.config:
        p = Path(args.config)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        spec = SyntheticSpec.from_dict(json.loads(p.read_text()))
        if args.seed is not None:
            spec = SyntheticSpec.from_dict({**spec.to_dict(), "seed": args.seed})
    else:
        canvas = _parse_pair(args.canvas, "--canvas")
        obj = _parse_pair(args.object, "--object")
        velocity = _parse_pair(args.velocity, "--velocity")
        start = _parse_pair(args.start, "--start") if args.start else None
        spec = SyntheticSpec.constant(
            canvas,
            obj,
            velocity,
            args.frames,
            seed=args.seed if args.seed is not None else 0,
            background=args.background,
            start=start,
        )
    frames, rois = generate_sequence(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_sequence(frames, out)

    lines = [_echo_header({"synthetic": spec.to_dict()})]
    for t, roi in enumerate(rois):
        lines.append(json.dumps({"frame": t, "boxes": [roi.to_dict()]}, sort_keys=True))
    (out / "truth.jsonl").write_text("\n".join(lines) + "\n")
    print(f"wrote {len(frames)} frames ({frames[0].width}x{frames[0].height}) and truth.jsonl to {out}")
    return 0


def cmd_estimate(args: argparse.Namespace) -> int:
    frames = load_sequence(args.frames)
    if len(frames) < 2:
        raise ConfigError(f"{args.frames}: need at least 2 frames, found {len(frames)}")
    try:
        params = MotionParams(args.mb_size, args.search_range, args.algo)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    total = 0
    for t in range(1, len(frames)):
        field = estimate_motion_field(frames[t - 1], frames[t], params)
        data = encode_metadata(field)
        (out / f"{t:06d}.mvm").write_bytes(data)
        total += len(data)
        if t == 1:
            print(f"grid {field.cols}x{field.rows} = {field.cols * field.rows} MBs, {len(data)} bytes per field")
    print(f"wrote {len(frames) - 1} metadata files ({total} bytes) to {out}")
    return 0


def _load_fields_dir(directory: str | Path):
    files = sorted(Path(directory).glob("*.mvm"))
    if not files:
        raise MissingDataError(f"{directory}: no .mvm metadata files")
    return [decode_metadata(f.read_bytes()) for f in files]


def run_simulation(cfg: dict) -> tuple[ResultTrace, "object"]:
    """Execute one simulate run from an effective config; pure in-memory."""
    if cfg.get("detections") is None:
        raise ConfigError("config needs a 'detections' trace path")
    det_path = Path(cfg["detections"])
    if not det_path.is_file():
        raise ConfigError(f"detections trace not found: {det_path}")
    provider_seed = cfg["provider"].get("seed")
    if provider_seed is None:
        provider_seed = cfg["seed"]
    provider = TraceProvider.from_file(
        det_path,
        noise_sigma=float(cfg["provider"]["noise_sigma"]),
        seed=int(provider_seed),
    )
    pcfg = _pipeline_config(cfg)
    if cfg.get("frames_dir") and cfg.get("metadata_dir"):
        raise ConfigError("config must name one input source, not both frames_dir and metadata_dir")
    if cfg.get("frames_dir"):
        frames = load_sequence(cfg["frames_dir"])
        trace = run_pipeline(provider, pcfg, frames=frames)
    elif cfg.get("metadata_dir"):
        fields = _load_fields_dir(cfg["metadata_dir"])
        trace = run_pipeline(provider, pcfg, fields=fields)
    else:
        raise ConfigError("config needs either 'frames_dir' or 'metadata_dir'")
    trace.config = cfg
    trace.version = __version__
    report = summarize(trace, SocConfig.from_dict(cfg["soc"]))
    return trace, report


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = build_run_config(args.config, args)
    trace, report = run_simulation(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    trace.save(out / "trace.jsonl")
    (out / "energy.json").write_text(
        json.dumps(
            {"config": cfg, "version": __version__, "report": report.to_dict()},
            sort_keys=True,
            indent=2,
        )
        + "\n"
    )
    _write_csv(out / "energy.csv", cfg, ["component", "mj", "percent"], report.csv_rows())
    print(report.to_text())
    print(f"wrote trace.jsonl, energy.json, energy.csv to {out}")
    return 0


def _aligned_boxes(
    trace: ResultTrace, truth: dict[int, list[Roi]]
) -> tuple[list[list[Roi]], list[list[Roi]]]:
    dets, gts = [], []
    for f in trace.frames:
        if f.index not in truth:
            raise MissingDataError(f"frame-index mismatch: no ground truth for frame {f.index}")
        dets.append([d.roi for d in f.detections])
        gts.append(truth[f.index])
    return dets, gts


def evaluate_trace(
    trace: ResultTrace, truth: dict[int, list[Roi]], thresholds: tuple[float, ...]
) -> dict:
    dets, gts = _aligned_boxes(trace, truth)
    result: dict = {
        "frames": len(dets),
        "detections": sum(len(d) for d in dets),
        "ap": [(t, average_precision(dets, gts, t)) for t in thresholds],
    }
    if dets and all(len(g) == 1 for g in gts):
        preds = [d[0] if d else None for d in dets]
        result["success"] = success_curve(preds, [g[0] for g in gts], thresholds)
    else:
        result["success"] = None
    if result["detections"] == 0:
        print("warning: trace contains no detections; AP is 0 by definition", file=sys.stderr)
    return result


def cmd_evaluate(args: argparse.Namespace) -> int:
    trace = ResultTrace.load(args.trace)
    truth = read_detection_trace(args.truth)
    thresholds = (
        tuple(float(t) for t in args.thresholds.split(",")) if args.thresholds else DEFAULT_THRESHOLDS
    )
    cfg = {"trace": str(args.trace), "truth": str(args.truth), "thresholds": list(thresholds)}
    result = evaluate_trace(trace, truth, thresholds)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "ap.csv", cfg, ["threshold", "ap"], result["ap"])
    if result["success"] is not None:
        _write_csv(out / "success.csv", cfg, ["threshold", "success_rate"], result["success"])
    (out / "summary.json").write_text(
        json.dumps({"config": cfg, "version": __version__, "result": result}, sort_keys=True, indent=2)
        + "\n"
    )
    ap_mid = dict(result["ap"]).get(0.5)
    if ap_mid is not None:
        print(f"AP@0.5 = {ap_mid:.4f}")
    print(f"wrote ap.csv{', success.csv' if result['success'] is not None else ''}, summary.json to {out}")
    return 0


SWEEP_AXES = ("ew", "mb_size", "algorithm")


def _sweep_variant(cfg: dict, axis: str, value) -> dict:
    variant = json.loads(json.dumps(cfg))  # deep copy
    if axis == "ew":
        variant["mode"] = f"ew:{int(value)}"
    elif axis == "mb_size":
        variant["motion"]["mb_size"] = int(value)
    elif axis == "algorithm":
        variant["motion"]["algorithm"] = str(value)
    else:
        raise ConfigError(f"unknown sweep axis {axis!r}, expected one of {SWEEP_AXES}")
    return variant


def run_sweep(cfg: dict, axis: str, values: list) -> list[dict]:
    """One simulate + evaluate run per value; rows ordered like `values`."""
    truth_path = cfg.get("truth") or cfg.get("detections")
    if truth_path is None:
        raise ConfigError("sweep needs 'truth' or 'detections' in the config")
    if axis in ("mb_size", "algorithm") and not cfg.get("frames_dir"):
        raise ConfigError(
            f"a {axis} sweep re-estimates motion and needs 'frames_dir'; "
            "precomputed metadata_dir fields are fixed"
        )
    truth = read_detection_trace(truth_path)

    def one(value) -> dict:
        variant = _sweep_variant(cfg, axis, value)
        try:
            trace, report = run_simulation(variant)
            result = evaluate_trace(trace, truth, (0.5,))
            ap05 = dict(result["ap"])[0.5]
            return {
                "value": value,
                "accuracy_at_0.5": ap05,
                "energy_saving": report.saving_vs_baseline,
                "achieved_fps": report.achieved_fps,
                "trace": trace,
                "report": report,
                "config": variant,
            }
        except EuphratesError as e:
            raise ConfigError(f"sweep run {axis}={value}: {e.__class__.__name__}: {e}") from None

    with ThreadPoolExecutor(max_workers=_max_workers(len(values))) as pool:
        return list(pool.map(one, values))


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = build_run_config(args.config, args)
    if args.axis == "algorithm":
        values: list = [v.strip() for v in args.values.split(",") if v.strip()]
    else:
        try:
            values = [int(v) for v in args.values.split(",") if v.strip()]
        except ValueError:
            raise ConfigError(f"--values for axis {args.axis} must be integers") from None
    if not values:
        raise ConfigError("--values is empty")

    rows = run_sweep(cfg, args.axis, values)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for row in rows:
        sub = out / f"{args.axis}_{row['value']}"
        sub.mkdir(parents=True, exist_ok=True)
        row["trace"].save(sub / "trace.jsonl")
        (sub / "energy.json").write_text(
            json.dumps(
                {"config": row["config"], "version": __version__, "report": row["report"].to_dict()},
                sort_keys=True,
                indent=2,
            )
            + "\n"
        )
    table = [
        (row["value"], row["accuracy_at_0.5"], row["energy_saving"], row["achieved_fps"])
        for row in rows
    ]
    _write_csv(
        out / "sweep.csv",
        {**cfg, "sweep": {"axis": args.axis, "values": values}},
        [args.axis, "accuracy_at_0.5", "energy_saving", "achieved_fps"],
        table,
    )
    for value, acc, saving, fps in table:
        print(f"{args.axis}={value}: accuracy@0.5 {acc:.4f}, saving {saving:.3f}, fps {fps:.1f}")
    print(f"wrote sweep.csv and per-run outputs to {out}")
    return 0


# ---------------------------------------------------------------------------
# Argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="euphrates",
        description="Motion-extrapolated continuous vision simulator.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic sequence with ground truth")
    p.add_argument("--config", help="SyntheticSpec JSON file")
    p.add_argument("--canvas", default="128x96", help="canvas WxH (default 128x96)")
    p.add_argument("--object", default="32x16", help="object WxH (default 32x16)")
    p.add_argument("--frames", type=int, default=30)
    p.add_argument("--velocity", default="2,1", help="per-frame displacement dx,dy")
    p.add_argument("--start", default=None, help="initial top-left x,y (default: centered)")
    p.add_argument("--background", choices=["flat", "noise"], default="flat")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("estimate", help="estimate motion metadata for a frame directory")
    p.add_argument("--frames", required=True, help="directory of PGM frames")
    p.add_argument("--mb-size", type=int, default=16)
    p.add_argument("--search-range", type=int, default=7)
    p.add_argument("--algo", choices=["es", "tss"], default="es")
    p.add_argument("--out", required=True, help="output directory for .mvm files")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", help="run the I/E-frame pipeline and the energy model")
    p.add_argument("--config", help="run configuration JSON")
    p.add_argument("--frames", help="frame directory (overrides config frames_dir)")
    p.add_argument("--detections", help="detection trace path (overrides config)")
    p.add_argument("--mode", help="ew:N or adaptive")
    p.add_argument("--mb-size", dest="mb_size", type=int)
    p.add_argument("--search-range", dest="search_range", type=int)
    p.add_argument("--algo", choices=["es", "tss"])
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("evaluate", help="score a result trace against ground truth")
    p.add_argument("--trace", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--thresholds", help="comma-separated IoU thresholds (default 0:1:0.05)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="simulate+evaluate across one axis")
    p.add_argument("--config", help="base run configuration JSON")
    p.add_argument("--axis", choices=SWEEP_AXES, required=True)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--mode", help="base mode for non-ew axes")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except EuphratesError as e:
        print(f"error {e.__class__.__name__}: {e}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as e:
        print(f"error {e.__class__.__name__}: {e}", file=sys.stderr)
        return 3


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
