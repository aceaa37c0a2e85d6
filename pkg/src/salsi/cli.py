"""Command-line interface.

Usage::

    salsi phantom --out data/
    salsi run --config data/run.json --out result/
    salsi run --input vol.f32 --header vol.hdr --seed 43,31,16 --out result/
    salsi saliency --input vol.f32 --out work/
    salsi threshold --out work/ --threshold auto
    salsi grow --out work/ --seed 43,31,16
    salsi post --out work/
    salsi eval --pred work/polylines.csv --ref data/reference.csv --header vol.hdr --out work/
    salsi report --out result/

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 stage failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .growing import SeedError
from .metrics import aggregate, evaluate_inlines
from .morphology import read_polylines, write_polylines
from .phantom import PhantomSpec, default_seed, generate_phantom
from .pipeline import (
    ConfigError,
    RunConfig,
    StageError,
    header_for,
    read_metrics,
    render_report,
    run_pipeline,
    stage_grow,
    stage_post,
    stage_saliency,
    stage_threshold,
    write_metrics,
)
from .volume import Dims, VolumeFormatError, load_mask, load_volume, read_header, save_mask, save_volume

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_STAGE = 4


def _seed(text: str) -> tuple[int, int, int]:
    try:
        m, n, k = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be m,n,k integers, got {text!r}") from None
    return (m, n, k)


def _slices(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"slices must be comma-separated integers, got {text!r}") from None


def _threshold(text: str):
    if text == "auto":
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"threshold must be 'auto' or a number, got {text!r}") from None


# flag dest -> RunConfig field
_OVERRIDES = {
    "input": "input",
    "header": "header",
    "window": "window",
    "tiling": "tiling",
    "surround_grid": "surround_grid",
    "threshold": "threshold",
    "seed": "seeds",
    "connectivity": "connectivity",
    "se_side": "se_side",
    "out": "out",
    "slices": "slices",
    "threads": "threads",
    "reference_polylines": "reference_polylines",
    "reference_mask": "reference_mask",
}


def _add_common(p: argparse.ArgumentParser, *names):
    opts = {
        "input": dict(help="raw float32 volume file"),
        "header": dict(help="header file (default: input with .hdr suffix)"),
        "config": dict(help="JSON file with RunConfig fields; flags override it"),
        "window": dict(type=int, help="saliency window side L (default 3)"),
        "tiling": dict(choices=["tile", "slide"], help="non-overlapping tiles or sliding windows"),
        "surround_grid": dict(choices=["tile", "voxel"], help="grid for the center-surround step in tile mode"),
        "threshold": dict(type=_threshold, help="'auto' (Otsu) or a manual value as a fraction of max saliency"),
        "seed": dict(type=_seed, action="append", metavar="M,N,K", help="region-growing seed (repeatable)"),
        "connectivity": dict(type=int, choices=[6, 26], help="flood-fill connectivity (default 6)"),
        "se_side": dict(type=int, help="structuring-element side (default 3)"),
        "out": dict(help="output / working directory"),
        "slices": dict(type=_slices, metavar="K1,K2,...", help="inlines to export as PNG"),
        "threads": dict(type=int, help="thread budget for the saliency stage"),
        "reference_polylines": dict(help="reference boundary curves (CSV)"),
        "reference_mask": dict(help="reference body mask (u8 raw file with .hdr alongside)"),
    }
    for name in names:
        p.add_argument("--" + name.replace("_", "-"), dest=name, default=None, **opts[name])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="salsi", description="Salt-dome delineation from 3D spectral saliency.")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("run", help="full pipeline")
    _add_common(p, "input", "header", "config", "window", "tiling", "surround_grid", "threshold", "seed",
                "connectivity", "se_side", "out", "slices", "threads", "reference_polylines", "reference_mask")
    p.add_argument("--timings", help="write stage timings as JSON to this file (kept out of --out)")

    p = sub.add_parser("saliency", help="saliency map S from a volume")
    _add_common(p, "input", "header", "config", "window", "tiling", "surround_grid", "out", "threads")

    p = sub.add_parser("threshold", help="binarise S into B")
    _add_common(p, "config", "threshold", "out")

    p = sub.add_parser("grow", help="grow the salt body SD from B")
    _add_common(p, "config", "seed", "connectivity", "out")

    p = sub.add_parser("post", help="dilate SD, take its perimeter and extract curves")
    _add_common(p, "config", "se_side", "out")

    p = sub.add_parser("phantom", help="write a synthetic dome volume with ground truth")
    p.add_argument("--out", required=True)
    p.add_argument("--dims", type=_seed, default=(64, 64, 32), metavar="M,N,K")
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--rng-seed", type=int, default=0)

    p = sub.add_parser("eval", help="metrics from two polyline sets")
    p.add_argument("--pred", required=True, help="predicted curves (CSV)")
    p.add_argument("--ref", required=True, help="reference curves (CSV)")
    p.add_argument("--pred-mask", help="predicted body mask (u8 raw, .hdr alongside)")
    p.add_argument("--ref-mask", help="reference body mask (u8 raw, .hdr alongside)")
    p.add_argument("--header", help="volume header, used for the slice size")
    p.add_argument("--out", required=True)

    p = sub.add_parser("report", help="render a report from persisted metrics")
    p.add_argument("--out", required=True, help="directory holding metrics.json")
    p.add_argument("--timings", help="stage timings JSON written by 'run --timings'")
    return parser


def _config(args) -> RunConfig:
    data = {}
    if getattr(args, "config", None):
        data = RunConfig.load(args.config).to_dict()
    for dest, name in _OVERRIDES.items():
        value = getattr(args, dest, None)
        if value is not None:
            data[name] = value
    return RunConfig.from_dict(data)


def _work_dir(config: RunConfig) -> Path:
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_run(args) -> int:
    config = _config(args)
    result = run_pipeline(config)
    timings = result.timings.as_dict()
    if args.timings:
        Path(args.timings).write_text(json.dumps(timings, indent=2) + "\n")
    print(f"threshold {result.threshold:.6g}; body perimeter {result.sd_b.count()} voxels; "
          f"{len(result.polylines)} inline curves; leakage fraction {result.leakage:.3f}")
    if result.report is not None:
        print(render_report(result.report, timings), end="")
    else:
        for name, value in timings.items():
            print(f"{name:>13s}  {value:.4f} s")
    return EXIT_OK


def _cmd_saliency(args) -> int:
    config = _config(args)
    if not config.input:
        raise ConfigError("--input is required")
    volume = load_volume(config.input, config.header_path)
    try:
        params = config.saliency_params
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if min(volume.dims.shape) < params.window:
        raise ConfigError(f"window {params.window} exceeds volume dims {volume.dims.shape}")
    out = _work_dir(config)
    try:
        stage_saliency(volume, params, out, config.threads)
    except Exception as exc:
        raise StageError("saliency", exc) from exc
    print(f"wrote {out / 'S.f32'}")
    return EXIT_OK


def _cmd_threshold(args) -> int:
    config = _config(args)
    out = _work_dir(config)
    s = load_volume(out / "S.f32", out / "S.hdr")
    try:
        b, value = stage_threshold(s.samples, config.threshold, out)
    except Exception as exc:
        raise StageError("threshold", exc) from exc
    print(f"threshold {value:.6g}; {b.count()} boundary voxels; wrote {out / 'B.u8'}")
    return EXIT_OK


def _cmd_grow(args) -> int:
    config = _config(args)
    if not config.seeds:
        raise ConfigError("at least one --seed is required")
    out = _work_dir(config)
    b = load_mask(out / "B.u8", out / "B.hdr")
    for s in config.seeds:
        if not all(0 <= x < d for x, d in zip(s, b.dims.shape)):
            raise ConfigError(f"seed {s} lies outside volume {b.dims.shape}")
    try:
        sd, leak = stage_grow(b, config.seeds, config.connectivity, out)
    except Exception as exc:
        raise StageError("growing", exc) from exc
    print(f"grew {sd.count()} voxels; leakage fraction {leak:.3f}; wrote {out / 'SD.u8'}")
    return EXIT_OK


def _cmd_post(args) -> int:
    config = _config(args)
    if config.se_side < 1 or config.se_side % 2 == 0:
        raise ConfigError(f"structuring-element side must be odd and >= 1, got {config.se_side}")
    out = _work_dir(config)
    sd = load_mask(out / "SD.u8", out / "SD.hdr")
    try:
        _, sd_b, polylines = stage_post(sd, config.se_side, out)
    except Exception as exc:
        raise StageError("post_process", exc) from exc
    print(f"{sd_b.count()} perimeter voxels; {len(polylines)} inline curves; wrote {out / 'polylines.csv'}")
    return EXIT_OK


def _cmd_phantom(args) -> int:
    try:
        spec = PhantomSpec.scaled(Dims(*args.dims), noise=args.noise, seed=args.rng_seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    phantom = generate_phantom(spec)
    save_volume(phantom.volume, out / "volume.f32", out / "volume.hdr")
    save_mask(phantom.mask, out / "mask.u8", out / "mask.hdr")
    write_polylines(phantom.polylines, out / "reference.csv")
    seed = default_seed(spec)
    config = RunConfig(
        input=str(out / "volume.f32"),
        header=str(out / "volume.hdr"),
        seeds=[seed],
        reference_polylines=str(out / "reference.csv"),
        reference_mask=str(out / "mask.u8"),
    )
    data = config.to_dict(portable=True)
    (out / "run.json").write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    print(f"wrote phantom to {out}; interior seed {seed[0]},{seed[1]},{seed[2]}; run config {out / 'run.json'}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    pred = read_polylines(args.pred)
    ref = read_polylines(args.ref)
    pred_body = load_mask(args.pred_mask, header_for(args.pred_mask)) if args.pred_mask else None
    ref_body = load_mask(args.ref_mask, header_for(args.ref_mask)) if args.ref_mask else None
    if (pred_body is None) != (ref_body is None):
        raise ConfigError("--pred-mask and --ref-mask must be given together")
    slice_dims = None
    if args.header:
        dims = read_header(args.header)[0]
        slice_dims = (dims.m, dims.n)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        rows = evaluate_inlines(pred_body, ref_body, pred, ref, slice_dims=slice_dims)
        report = aggregate(rows)
    except Exception as exc:
        raise StageError("metrics", exc) from exc
    write_metrics(report, out)
    print(render_report(report), end="")
    return EXIT_OK


def _cmd_report(args) -> int:
    report = read_metrics(args.out)
    timings = json.loads(Path(args.timings).read_text()) if args.timings else None
    print(render_report(report, timings), end="")
    return EXIT_OK


_COMMANDS = {
    "run": _cmd_run,
    "saliency": _cmd_saliency,
    "threshold": _cmd_threshold,
    "grow": _cmd_grow,
    "post": _cmd_post,
    "phantom": _cmd_phantom,
    "eval": _cmd_eval,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.verb](args)
    except ConfigError as exc:
        print(f"salsi: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, VolumeFormatError) as exc:
        print(f"salsi: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except StageError as exc:
        print(f"salsi: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except SeedError as exc:
        print(f"salsi: stage 'growing' failed: {exc}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
