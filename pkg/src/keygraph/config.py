"""Flat pipeline configuration, serialisable as JSON."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from typing import Optional

from .features import FeatureParams
from .geometry import KeygraphThresholds
from .keypoints import DetectorParams
from .pose import InlierTolerance, PoseQuantization

__all__ = ["PipelineConfig", "load_config"]


@dataclass(frozen=True)
class PipelineConfig:
    # keypoint detection
    window_radius: int = 2
    quality_level: float = 0.02
    min_distance: float = 10.0
    max_keypoints: Optional[int] = 400
    # training enumerates every triple, so the model side gets a smaller cap
    model_max_keypoints: Optional[int] = 80
    subpixel: bool = True
    # keygraph filter
    min_angle: float = 5.0
    min_angle_gap: float = 5.0
    min_vertex_distance: float = 10.0
    # features
    fraction: float = 1.0 / 3.0
    rays_per_vertex: int = 3
    # classifier
    tau: float = 0.6
    radius: int = 1
    # pose voting
    translation_bin: float = 16.0
    scale_factor: float = 1.25
    rotation_bin: float = 15.0
    min_scale: float = 0.25
    max_scale: float = 4.0
    min_votes: int = 8
    vote_spread: bool = True
    inlier_translation: float = 16.0
    inlier_scale_ratio: float = 1.25
    inlier_rotation: float = 15.0
    # output and scene synthesis
    annotate: bool = False
    frame_width: int = 640
    frame_height: int = 480
    synth_min_scale: float = 0.7
    synth_max_scale: float = 1.4

    def __post_init__(self):
        # constructing the component params validates them
        self.detector_params()
        self.detector_params(model=True)
        self.thresholds()
        self.feature_params()
        self.quantization()
        if self.tau < 0:
            raise ValueError("tau must be >= 0")
        if self.radius not in (0, 1):
            raise ValueError("radius must be 0 or 1")
        if self.min_votes < 1:
            raise ValueError("min_votes must be >= 1")
        if not 0 < self.synth_min_scale <= self.synth_max_scale:
            raise ValueError("need 0 < synth_min_scale <= synth_max_scale")

    def detector_params(self, model: bool = False) -> DetectorParams:
        return DetectorParams(
            window_radius=self.window_radius,
            quality_level=self.quality_level,
            min_distance=self.min_distance,
            max_keypoints=self.model_max_keypoints if model else self.max_keypoints,
            subpixel=self.subpixel,
        )

    def thresholds(self) -> KeygraphThresholds:
        return KeygraphThresholds(self.min_angle, self.min_angle_gap, self.min_vertex_distance)

    def feature_params(self) -> FeatureParams:
        return FeatureParams(self.fraction, self.rays_per_vertex)

    def quantization(self) -> PoseQuantization:
        return PoseQuantization(
            self.translation_bin, self.scale_factor, self.rotation_bin, self.min_scale, self.max_scale
        )

    def tolerance(self) -> InlierTolerance:
        return InlierTolerance(self.inlier_translation, self.inlier_scale_ratio, self.inlier_rotation)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def replace(self, **changes) -> "PipelineConfig":
        return dataclasses.replace(self, **{k: v for k, v in changes.items() if v is not None})


def load_config(path) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError("config file must hold a JSON object")
    return PipelineConfig.from_dict(data)
