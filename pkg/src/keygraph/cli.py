"""Command line interface: ``keygraph train | detect | synth``."""
from __future__ import annotations

import argparse
import glob
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .classifier import load_index, save_index, train
from .config import PipelineConfig, load_config
from .exceptions import (
    ImageFormatError,
    IndexCorruptionError,
    IndexVersionError,
    KeygraphError,
    NoKeygraphsError,
    TooFewKeypointsError,
)
from .imaging import load_image, save_ppm
from .pipeline import FrameResult, annotate, detect_frame, frame_result_to_dict

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INTERNAL = 3

FRAME_SUFFIXES = (".ppm", ".png")


def _fail(message: str, code: int = EXIT_INPUT) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _write_json(path: Path, obj) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    os.replace(tmp, path)


def worker_count() -> int:
    cap = os.environ.get("KEYGRAPH_THREADS")
    default = min(4, os.cpu_count() or 1)
    if not cap:
        return default
    try:
        return max(1, min(int(cap), default))
    except ValueError:
        return default


def cmd_train(model_path, config_path, index_out_path) -> int:
    try:
        config = load_config(config_path)
    except (OSError, ValueError, TypeError) as exc:
        return _fail(f"config: {exc}")
    try:
        model = load_image(model_path)
    except (OSError, ImageFormatError) as exc:
        return _fail(f"io: cannot read model image: {exc}")
    stats: dict = {}
    try:
        index = train(model, config, stats)
    except TooFewKeypointsError:
        return _fail(f"too few keypoints ({stats.get('keypoints', 0)}) in {model_path}")
    except NoKeygraphsError:
        return _fail(f"no keygraphs: all {stats.get('keypoints', 0)} keypoints form thin or isosceles triangles")
    try:
        save_index(index, index_out_path)
    except OSError as exc:
        return _fail(f"io: cannot write index: {exc}")
    sizes = sorted(index.bucket_sizes().values())
    print(f"keypoints: {stats['keypoints']}")
    print(f"keygraphs: {stats['keygraphs']}")
    print(
        f"buckets: {len(sizes)} occupied of 2592, "
        f"max {sizes[-1]}, median {float(np.median(sizes)):g}"
    )
    print(f"index: {index_out_path}")
    return EXIT_OK


def _collect_frames(pattern: str) -> list[Path]:
    path = Path(pattern)
    if path.is_dir():
        frames = [p for p in path.iterdir() if p.suffix.lower() in FRAME_SUFFIXES and ".annotated" not in p.name]
    elif path.is_file():
        frames = [path]
    else:
        frames = [Path(p) for p in glob.glob(pattern)]
    return sorted(frames)


def _frame_config(index, config_path, overrides: dict) -> PipelineConfig:
    params = dict(index.params)
    if config_path is not None:
        with open(config_path, encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValueError("config file must hold a JSON object")
        params.update(data)
    params.update({k: v for k, v in overrides.items() if v is not None})
    config = PipelineConfig.from_dict(params)
    trained = index.config
    if config.feature_params() != trained.feature_params():
        raise ValueError("feature parameters differ from those the index was trained with")
    return config


def _process_frame(index, config, path: Path, out_dir: Path, write_annotated: bool) -> FrameResult:
    start = time.perf_counter()
    try:
        frame = load_image(path)
        result = detect_frame(index, frame, config, frame_id=path.name)
        if write_annotated:
            save_ppm(annotate(frame, result, index.model_size), out_dir / f"{path.stem}.annotated.ppm")
    except Exception as exc:  # noqa: BLE001 - a bad frame must not abort the batch
        result = FrameResult(frame_id=path.name, detection=None, error=f"{type(exc).__name__}: {exc}")
        result.wall_ms = (time.perf_counter() - start) * 1000.0
    _write_json(out_dir / f"{path.stem}.json", frame_result_to_dict(result, index.model_size))
    return result


def cmd_detect(index_path, frames, config_path=None, out_dir="out", min_votes=None, tau=None, annotate_frames=None) -> int:
    try:
        index = load_index(index_path)
    except OSError as exc:
        return _fail(f"io: cannot read index: {exc}")
    except (IndexCorruptionError, IndexVersionError) as exc:
        return _fail(f"index: {exc}")
    try:
        config = _frame_config(index, config_path, {"min_votes": min_votes, "tau": tau})
    except (OSError, ValueError, TypeError) as exc:
        return _fail(f"config: {exc}")
    paths = _collect_frames(frames)
    if not paths:
        return _fail(f"no frames found at {frames}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_annotated = config.annotate if annotate_frames is None else annotate_frames

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        results = list(pool.map(lambda p: _process_frame(index, config, p, out, write_annotated), paths))

    print(f"{'frame':<28} {'found':>5} {'votes':>5} {'inliers':>7} {'ms':>8}")
    for r in results:
        found = r.detection is not None
        votes = r.detection.votes if found else r.peak_votes
        inliers = len(r.detection.inliers) if found else 0
        status = "error" if r.error else ("yes" if found else "no")
        print(f"{r.frame_id:<28} {status:>5} {votes:>5} {inliers:>7} {r.wall_ms:>8.1f}")
    detections = sum(r.detection is not None for r in results)
    mean_ms = float(np.mean([r.wall_ms for r in results]))
    print(f"frames: {len(results)}  detections: {detections}  mean ms/frame: {mean_ms:.1f}")
    return EXIT_OK


def cmd_synth(model_path, n_poses, seed, out_dir, config_path=None) -> int:
    from .synth import synthesize_scenes

    try:
        config = load_config(config_path)
    except (OSError, ValueError, TypeError) as exc:
        return _fail(f"config: {exc}")
    try:
        model = load_image(model_path)
    except (OSError, ImageFormatError) as exc:
        return _fail(f"io: cannot read model image: {exc}")
    if n_poses < 0:
        return _fail("n-poses must be >= 0")
    try:
        paths = synthesize_scenes(
            model,
            n_poses,
            seed,
            out_dir,
            frame_size=(config.frame_width, config.frame_height),
            scale_range=(config.synth_min_scale, config.synth_max_scale),
        )
    except OSError as exc:
        return _fail(f"io: {exc}")
    except ValueError as exc:
        return _fail(str(exc))
    print(f"wrote {len(paths)} frames to {out_dir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="keygraph", description="Keygraph object detection.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="build an index from a model image")
    p.add_argument("model", help="model image (PPM P6 or PNG)")
    p.add_argument("--index", required=True, help="output index file")
    p.add_argument("--config", help="JSON config file")

    p = sub.add_parser("detect", help="detect the model in a sequence of frames")
    p.add_argument("frames", help="frame file, directory or glob pattern")
    p.add_argument("--index", required=True)
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--config")
    p.add_argument("--min-votes", type=int)
    p.add_argument("--tau", type=float)
    p.add_argument("--annotate", action="store_true", default=None)

    p = sub.add_parser("synth", help="plant the model in synthetic scenes")
    p.add_argument("model")
    p.add_argument("--n-poses", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        if args.command == "train":
            return cmd_train(args.model, args.config, args.index)
        if args.command == "detect":
            return cmd_detect(args.index, args.frames, args.config, args.out, args.min_votes, args.tau, args.annotate)
        return cmd_synth(args.model, args.n_poses, args.seed, args.out, args.config)
    except KeygraphError as exc:
        return _fail(str(exc))
    except Exception as exc:  # noqa: BLE001
        return _fail(f"internal: {type(exc).__name__}: {exc}", EXIT_INTERNAL)


if __name__ == "__main__":
    sys.exit(main())
