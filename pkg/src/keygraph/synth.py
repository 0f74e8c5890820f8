"""Synthetic test scenes: textures, planted model poses, ground truth."""
from __future__ import annotations

import colorsys
import json
import math
import os
from pathlib import Path

import numpy as np
from scipy import ndimage

from ._validation import check_image
from .imaging import round_half_up, save_ppm
from .pose import Pose

__all__ = [
    "fill_convex_polygon",
    "random_shapes_image",
    "smooth_background",
    "random_pose",
    "composite",
    "synthesize_scenes",
]


def fill_convex_polygon(img: np.ndarray, vertices, color) -> None:
    """Paint a convex polygon in place (pixel centres inside or on the boundary)."""
    v = np.asarray(vertices, dtype=np.float64)
    height, width = img.shape[:2]
    x0, y0 = np.maximum(np.floor(v.min(axis=0)).astype(int), 0)
    x1, y1 = np.minimum(np.ceil(v.max(axis=0)).astype(int), (width - 1, height - 1))
    if x1 < x0 or y1 < y0:
        return
    ys, xs = np.mgrid[y0 : y1 + 1, x0 : x1 + 1]
    area = np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1])
    sign = 1.0 if area >= 0 else -1.0
    inside = np.ones(xs.shape, dtype=bool)
    for a, b in zip(v, np.roll(v, -1, axis=0)):
        cross = (b[0] - a[0]) * (ys - a[1]) - (b[1] - a[1]) * (xs - a[0])
        inside &= sign * cross >= 0
    img[y0 : y1 + 1, x0 : x1 + 1][inside] = color


def _saturated_colour(rng) -> tuple[int, int, int]:
    h = rng.uniform(0.0, 1.0)
    s = rng.uniform(0.55, 1.0)
    v = rng.uniform(0.6, 1.0)
    return tuple(int(round(255 * c)) for c in colorsys.hsv_to_rgb(h, s, v))


def random_shapes_image(width: int, height: int, n_shapes: int, rng, background=None) -> np.ndarray:
    """Random coloured triangles and rotated rectangles on a plain or given background."""
    if background is None:
        img = np.empty((height, width, 3), dtype=np.uint8)
        img[:] = _saturated_colour(rng)
    else:
        img = check_image(background).copy()
    scale = min(width, height)
    for _ in range(n_shapes):
        cx, cy = rng.uniform(0, width), rng.uniform(0, height)
        size = rng.uniform(0.08, 0.3) * scale
        if rng.uniform() < 0.5:
            angles = np.sort(rng.uniform(0, 2 * math.pi, 3))
            radii = size * rng.uniform(0.6, 1.0, 3)
            verts = np.column_stack([cx + radii * np.cos(angles), cy + radii * np.sin(angles)])
        else:
            theta = rng.uniform(0, math.pi)
            half = size * rng.uniform(0.3, 0.7, 2)
            c, s = math.cos(theta), math.sin(theta)
            corners = np.array([[-1, -1], [1, -1], [1, 1], [-1, 1]]) * half
            verts = corners @ np.array([[c, s], [-s, c]]) + (cx, cy)
        fill_convex_polygon(img, verts, _saturated_colour(rng))
    return img


def smooth_background(width: int, height: int, rng, cells: int = 6) -> np.ndarray:
    """Low-frequency colour noise."""
    coarse = rng.uniform(40, 215, size=(cells, cells, 3))
    zoom = (height / cells, width / cells, 1)
    img = ndimage.zoom(coarse, zoom, order=1, mode="nearest")[:height, :width]
    return np.clip(np.round(img), 0, 255).astype(np.uint8)


def random_pose(model_size, frame_size, rng, scale_range=(0.7, 1.4), margin: float = 2.0) -> Pose:
    """Similarity pose keeping the whole transformed model inside the frame."""
    width, height = model_size
    fw, fh = frame_size
    corners = np.array([(0, 0), (width - 1, 0), (width - 1, height - 1), (0, height - 1)], dtype=float)
    for _ in range(1000):
        scale = float(rng.uniform(*scale_range))
        rotation = float(rng.uniform(0.0, 360.0))
        placed = Pose(0.0, 0.0, scale, rotation).apply(corners)
        lo = margin - placed.min(axis=0)
        hi = np.array([fw - 1, fh - 1]) - margin - placed.max(axis=0)
        if np.all(hi >= lo):
            tx, ty = rng.uniform(lo, hi)
            return Pose(float(tx), float(ty), scale, rotation)
    raise ValueError(f"model {model_size} does not fit in frame {frame_size} at scales {scale_range}")


def composite(model, background, pose: Pose) -> np.ndarray:
    """Paste ``model`` into ``background`` under ``pose`` with nearest-neighbour sampling."""
    model = check_image(model, "model")
    frame = check_image(background, "background").copy()
    fh, fw = frame.shape[:2]
    mh, mw = model.shape[:2]
    ys, xs = np.mgrid[0:fh, 0:fw]
    src = pose.inverse().apply(np.column_stack([xs.ravel(), ys.ravel()]))
    sx, sy = round_half_up(src[:, 0]), round_half_up(src[:, 1])
    inside = (sx >= 0) & (sx < mw) & (sy >= 0) & (sy < mh)
    flat = frame.reshape(-1, 3)
    flat[inside] = model[sy[inside], sx[inside]]
    return frame


def _write_json(path, obj) -> None:
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def synthesize_scenes(
    model,
    n_poses: int,
    seed: int,
    out_dir,
    frame_size=(640, 480),
    scale_range=(0.7, 1.4),
    n_distractors: int = 10,
) -> list[Path]:
    """Write ``frame_NNNN.ppm`` plus ``frame_NNNN.truth.json`` for each pose.

    Every scene uses its own generator seeded from ``(seed, scene index)``,
    so scenes are reproducible individually.
    """
    model = check_image(model, "model")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    mh, mw = model.shape[:2]
    fw, fh = frame_size
    paths = []
    for i in range(n_poses):
        rng = np.random.default_rng([int(seed), i])
        background = smooth_background(fw, fh, rng)
        background = random_shapes_image(fw, fh, n_distractors, rng, background)
        pose = random_pose((mw, mh), (fw, fh), rng, scale_range)
        frame = composite(model, background, pose)
        path = out / f"frame_{i:04d}.ppm"
        save_ppm(frame, path)
        _write_json(
            out / f"frame_{i:04d}.truth.json",
            {
                "frame": path.name,
                "pose": pose.to_dict(),
                "model_size": [mw, mh],
                "frame_size": [fw, fh],
                "seed": int(seed),
                "index": i,
            },
        )
        paths.append(path)
    return paths
