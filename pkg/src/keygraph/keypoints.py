"""Minimum-eigenvalue ("good features to track") corner detection."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import ndimage

from ._validation import check_gray
from .exceptions import ImageTooSmallError

__all__ = ["Keypoint", "DetectorParams", "corner_scores", "detect_keypoints", "keypoints_array"]


@dataclass(frozen=True)
class Keypoint:
    x: float
    y: float
    score: float


@dataclass(frozen=True)
class DetectorParams:
    window_radius: int = 2
    quality_level: float = 0.02
    min_distance: float = 10.0
    max_keypoints: Optional[int] = 400
    subpixel: bool = True

    def __post_init__(self):
        if not 0.0 < self.quality_level < 1.0:
            raise ValueError(f"quality_level must lie in (0, 1), got {self.quality_level}")
        if self.min_distance < 0:
            raise ValueError("min_distance must be >= 0")
        if self.window_radius < 0:
            raise ValueError("window_radius must be >= 0")
        if self.max_keypoints is not None and self.max_keypoints < 0:
            raise ValueError("max_keypoints must be >= 0 or None")


def corner_scores(gray, window_radius: int = 2) -> np.ndarray:
    """Smaller eigenvalue of the windowed structure tensor at every pixel."""
    gray = check_gray(gray)
    gx = ndimage.sobel(gray, axis=1, mode="nearest") / 8.0
    gy = ndimage.sobel(gray, axis=0, mode="nearest") / 8.0
    # Gaussian window truncated at window_radius; a box window pulls the
    # response peak about window_radius px inside an L-shaped corner
    sigma = max(window_radius, 1) / 2.0
    truncate = window_radius / sigma if window_radius > 0 else 0.0
    sxx = ndimage.gaussian_filter(gx * gx, sigma, mode="nearest", truncate=truncate)
    syy = ndimage.gaussian_filter(gy * gy, sigma, mode="nearest", truncate=truncate)
    sxy = ndimage.gaussian_filter(gx * gy, sigma, mode="nearest", truncate=truncate)
    half_trace = 0.5 * (sxx + syy)
    radius = np.sqrt((0.5 * (sxx - syy)) ** 2 + sxy**2)
    return np.maximum(half_trace - radius, 0.0)


def _subpixel_offsets(scores: np.ndarray, xs: np.ndarray, ys: np.ndarray):
    """Vertex of the parabola through each peak and its two axis neighbours."""
    h, w = scores.shape
    xl, xr = np.clip(xs - 1, 0, w - 1), np.clip(xs + 1, 0, w - 1)
    yu, yd = np.clip(ys - 1, 0, h - 1), np.clip(ys + 1, 0, h - 1)
    c = scores[ys, xs]
    offsets = []
    for lo, hi in ((scores[ys, xl], scores[ys, xr]), (scores[yu, xs], scores[yd, xs])):
        curv = lo - 2 * c + hi
        safe = np.where(curv < 0, curv, -1.0)
        offsets.append(np.where(curv < 0, np.clip(0.5 * (lo - hi) / safe, -0.5, 0.5), 0.0))
    return offsets[0], offsets[1]


def detect_keypoints(gray, params: DetectorParams = DetectorParams()) -> list[Keypoint]:
    """Shi-Tomasi corners sorted by descending score.

    Candidates are 3x3 local maxima scoring at least ``quality_level`` times
    the image maximum; they are accepted greedily, strongest first, unless
    closer than ``min_distance`` to an already accepted corner. With
    ``subpixel`` each peak is first moved (by at most half a pixel per axis)
    to the vertex of a parabola through its axis neighbours.
    """
    gray = check_gray(gray)
    side = 2 * params.window_radius + 3
    if gray.shape[0] < side or gray.shape[1] < side:
        raise ImageTooSmallError(
            f"image {gray.shape[1]}x{gray.shape[0]} smaller than {side}x{side}"
        )
    if params.max_keypoints == 0:
        return []

    scores = corner_scores(gray, params.window_radius)
    top = float(scores.max())
    if top <= 1e-12:
        return []
    # relative slack absorbs float noise in uniform_filter on flat plateaus
    peaks = scores >= ndimage.maximum_filter(scores, size=3, mode="nearest") * (1 - 1e-12)
    peaks &= scores >= params.quality_level * top
    ys, xs = np.nonzero(peaks)
    vals = scores[ys, xs]
    order = np.lexsort((xs, ys, -vals))

    px, py = xs.astype(np.float64), ys.astype(np.float64)
    if params.subpixel:
        dx, dy = _subpixel_offsets(scores, xs, ys)
        px = np.clip(px + dx, 0.0, gray.shape[1] - 1.0)
        py = np.clip(py + dy, 0.0, gray.shape[0] - 1.0)

    min_d = float(params.min_distance)
    min_d2 = min_d * min_d
    cell = max(min_d, 1.0)
    grid: dict[tuple[int, int], list[tuple[float, float]]] = {}
    kept: list[int] = []
    limit = params.max_keypoints
    for i in order:
        x, y = float(px[i]), float(py[i])
        cx, cy = int(x // cell), int(y // cell)
        if min_d > 0 and any(
            (qx - x) ** 2 + (qy - y) ** 2 < min_d2
            for gx in (cx - 1, cx, cx + 1)
            for gy in (cy - 1, cy, cy + 1)
            for qx, qy in grid.get((gx, gy), ())
        ):
            continue
        grid.setdefault((cx, cy), []).append((x, y))
        kept.append(i)
        if limit is not None and len(kept) >= limit:
            break
    return [Keypoint(float(px[i]), float(py[i]), float(vals[i])) for i in kept]


def keypoints_array(keypoints) -> np.ndarray:
    """``(n, 2)`` array of keypoint positions."""
    return np.array([(kp.x, kp.y) for kp in keypoints], dtype=np.float64).reshape(-1, 2)
