"""scikit-learn style wrapper around training and detection."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_image
from .classifier import KeygraphIndex, load_index, save_index, train
from .config import PipelineConfig
from .pipeline import FrameResult, detect_frame
from .pose import Pose, pose_agrees

__all__ = ["KeygraphDetector"]

_DEFAULTS = PipelineConfig()


class KeygraphDetector(BaseEstimator):
    """Single-image object detector built on triangle keygraphs.

    ``fit`` takes the model image; ``predict`` takes one frame or a list of
    frames and returns a :class:`~keygraph.pose.Detection` (or ``None``)
    per frame. Every constructor argument maps onto the
    :class:`~keygraph.config.PipelineConfig` field of the same name, so
    ``get_params``/``set_params`` and ``sklearn.base.clone`` work as usual.

    Examples
    --------
    >>> det = KeygraphDetector(tau=0.5).fit(model_image)  # doctest: +SKIP
    >>> det.predict(frame)[0].pose  # doctest: +SKIP
    """

    def __init__(
        self,
        window_radius=_DEFAULTS.window_radius,
        quality_level=_DEFAULTS.quality_level,
        min_distance=_DEFAULTS.min_distance,
        max_keypoints=_DEFAULTS.max_keypoints,
        model_max_keypoints=_DEFAULTS.model_max_keypoints,
        subpixel=_DEFAULTS.subpixel,
        min_angle=_DEFAULTS.min_angle,
        min_angle_gap=_DEFAULTS.min_angle_gap,
        min_vertex_distance=_DEFAULTS.min_vertex_distance,
        fraction=_DEFAULTS.fraction,
        rays_per_vertex=_DEFAULTS.rays_per_vertex,
        tau=_DEFAULTS.tau,
        radius=_DEFAULTS.radius,
        translation_bin=_DEFAULTS.translation_bin,
        scale_factor=_DEFAULTS.scale_factor,
        rotation_bin=_DEFAULTS.rotation_bin,
        min_scale=_DEFAULTS.min_scale,
        max_scale=_DEFAULTS.max_scale,
        min_votes=_DEFAULTS.min_votes,
        vote_spread=_DEFAULTS.vote_spread,
        inlier_translation=_DEFAULTS.inlier_translation,
        inlier_scale_ratio=_DEFAULTS.inlier_scale_ratio,
        inlier_rotation=_DEFAULTS.inlier_rotation,
    ):
        self.window_radius = window_radius
        self.quality_level = quality_level
        self.min_distance = min_distance
        self.max_keypoints = max_keypoints
        self.model_max_keypoints = model_max_keypoints
        self.subpixel = subpixel
        self.min_angle = min_angle
        self.min_angle_gap = min_angle_gap
        self.min_vertex_distance = min_vertex_distance
        self.fraction = fraction
        self.rays_per_vertex = rays_per_vertex
        self.tau = tau
        self.radius = radius
        self.translation_bin = translation_bin
        self.scale_factor = scale_factor
        self.rotation_bin = rotation_bin
        self.min_scale = min_scale
        self.max_scale = max_scale
        self.min_votes = min_votes
        self.vote_spread = vote_spread
        self.inlier_translation = inlier_translation
        self.inlier_scale_ratio = inlier_scale_ratio
        self.inlier_rotation = inlier_rotation

    def get_config(self) -> PipelineConfig:
        return PipelineConfig(**self.get_params())

    @classmethod
    def from_config(cls, config: PipelineConfig) -> "KeygraphDetector":
        names = cls._get_param_names()
        return cls(**{k: v for k, v in config.to_dict().items() if k in names})

    @classmethod
    def from_index(cls, index) -> "KeygraphDetector":
        """Fitted detector around an existing index (object or file path)."""
        if not isinstance(index, KeygraphIndex):
            index = load_index(index)
        det = cls.from_config(index.config)
        det._set_index(index)
        return det

    def _set_index(self, index: KeygraphIndex) -> None:
        self.index_ = index
        self.model_size_ = index.model_size
        self.n_keygraphs_ = len(index)

    def fit(self, X, y=None):
        """Train on the model image ``X``; ``y`` is ignored."""
        stats: dict = {}
        index = train(check_image(X, "model"), self.get_config(), stats)
        self._set_index(index)
        self.n_keypoints_ = stats["keypoints"]
        return self

    def _frames(self, X) -> list[np.ndarray]:
        if isinstance(X, np.ndarray) and X.ndim == 4:
            frames = list(X)
        elif isinstance(X, (list, tuple)):
            frames = list(X)
        else:
            frames = [X]
        return [check_image(f, "frame") for f in frames]

    def detect(self, X) -> list[FrameResult]:
        """Full per-frame results, including stage timings."""
        check_is_fitted(self, "index_")
        config = self.get_config()
        return [detect_frame(self.index_, f, config, frame_id=str(i)) for i, f in enumerate(self._frames(X))]

    def predict(self, X) -> list:
        return [r.detection for r in self.detect(X)]

    def score(self, X, y) -> float:
        """Fraction of frames whose detected pose agrees with the true pose ``y``.

        ``y`` holds one :class:`~keygraph.pose.Pose` (or ``None`` for frames
        without the object) per frame; agreement uses the inlier tolerances.
        """
        config = self.get_config()
        detections = self.predict(X)
        truth = [y] if isinstance(y, Pose) else list(y)
        if len(truth) != len(detections):
            raise ValueError(f"{len(detections)} frames but {len(truth)} poses")
        hits = 0
        for det, pose in zip(detections, truth):
            if pose is None:
                hits += det is None
            else:
                hits += det is not None and pose_agrees(det.pose, pose, config.tolerance())
        return hits / len(truth)

    def save(self, path) -> None:
        check_is_fitted(self, "index_")
        save_index(self.index_, path)
