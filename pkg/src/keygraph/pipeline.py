"""Per-frame detection: keypoints, keygraphs, features, classification, voting."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._validation import check_image
from .classifier import KeygraphIndex, Match, classify
from .config import PipelineConfig
from .exceptions import TooFewPointsError
from .features import extract_features_batch
from .geometry import KeygraphSet, frame_keygraphs
from .imaging import rasterize_segment, round_half_up, to_chroma, to_grayscale
from .keypoints import detect_keypoints, keypoints_array
from .pose import Detection, PoseAccumulator, best_pose, detection_to_dict

__all__ = ["STAGES", "FrameResult", "detect_frame", "annotate", "frame_result_to_dict"]

STAGES = ("keypoints", "keygraphs", "features", "classify", "vote")


@dataclass
class FrameResult:
    frame_id: str
    detection: Optional[Detection]
    timings_ms: dict = field(default_factory=dict)
    peak_votes: int = 0
    n_keypoints: int = 0
    n_keygraphs: int = 0
    n_matches: int = 0
    triangles_examined: int = 0
    error: Optional[str] = None
    wall_ms: float = 0.0


def detect_frame(
    index: KeygraphIndex, frame, config: Optional[PipelineConfig] = None, frame_id: str = ""
) -> FrameResult:
    """Run the full detection chain on one frame.

    ``config`` defaults to the parameters recorded in the index; frame-side
    settings (tau, voting, thresholds) may differ, feature parameters may not.
    """
    config = index.config if config is None else config
    start = time.perf_counter()
    result = FrameResult(frame_id=frame_id, detection=None, timings_ms={s: 0.0 for s in STAGES})
    frame = check_image(frame, "frame")

    def lap(stage, t0):
        now = time.perf_counter()
        result.timings_ms[stage] = (now - t0) * 1000.0
        return now

    t = time.perf_counter()
    keypoints = detect_keypoints(to_grayscale(frame), config.detector_params())
    result.n_keypoints = len(keypoints)
    t = lap("keypoints", t)

    stats: dict = {}
    try:
        keygraphs = frame_keygraphs(keypoints_array(keypoints), config.thresholds(), stats)
    except TooFewPointsError:
        keygraphs = KeygraphSet.empty()
    result.triangles_examined = stats.get("examined", 0)
    result.n_keygraphs = len(keygraphs)
    t = lap("keygraphs", t)

    features = extract_features_batch(to_chroma(frame), keygraphs, config.feature_params())
    t = lap("features", t)

    matches: list[Match] = []
    for i in range(len(keygraphs)):
        m = classify(index, keygraphs[i], features[i], config.tau, config.radius)
        if m is not None:
            matches.append(m)
    result.n_matches = len(matches)
    t = lap("classify", t)

    width, height = index.model_size
    acc = PoseAccumulator(
        config.quantization(),
        anchor=((width - 1) / 2.0, (height - 1) / 2.0),
        spread=config.vote_spread,
    )
    for m in matches:
        acc.vote(m)
    counts = acc.counts()
    result.peak_votes = max(counts.values(), default=0)
    result.detection = best_pose(acc, config.min_votes, config.tolerance())
    lap("vote", t)

    result.wall_ms = (time.perf_counter() - start) * 1000.0
    return result


def frame_result_to_dict(result: FrameResult, model_size) -> dict:
    det = detection_to_dict(result.detection, model_size)
    if result.detection is None:
        det["votes"] = int(result.peak_votes)
    return {
        "frame": result.frame_id,
        "detection": det,
        "timings_ms": {k: round(v, 3) for k, v in result.timings_ms.items()},
        "wall_ms": round(result.wall_ms, 3),
        "keypoints": result.n_keypoints,
        "keygraphs": result.n_keygraphs,
        "triangles_examined": result.triangles_examined,
        "matches": result.n_matches,
        "error": result.error,
    }


def _draw_polyline(img: np.ndarray, points, colour, closed: bool = True) -> None:
    h, w = img.shape[:2]
    pts = [tuple(p) for p in np.asarray(points, dtype=float)]
    pairs = list(zip(pts, pts[1:] + pts[:1] if closed else pts[1:]))
    for p0, p1 in pairs:
        # walk unclipped, then drop pixels that fall outside the frame
        n = int(max(abs(p1[0] - p0[0]), abs(p1[1] - p0[1]))) + 1
        if n > 4 * (w + h):
            continue
        for x, y in rasterize_segment(p0, p1):
            if 0 <= x < w and 0 <= y < h:
                img[y, x] = colour


def annotate(frame, result: FrameResult, model_size) -> np.ndarray:
    """Copy of ``frame`` with inlier triangles (green) and the model outline (red)."""
    img = check_image(frame).copy()
    det = result.detection
    if det is None:
        return img
    for m in det.inliers:
        _draw_polyline(img, m.frame_keygraph.vertices, (0, 255, 0))
    quad = detection_to_dict(det, model_size)["quad"]
    _draw_polyline(img, quad, (255, 0, 0))
    for x, y in round_half_up(np.asarray(quad)):
        if 0 <= x < img.shape[1] and 0 <= y < img.shape[0]:
            img[y, x] = (255, 255, 0)
    return img
