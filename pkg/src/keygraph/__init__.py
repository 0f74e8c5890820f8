"""Object detection by classifying triangles of keypoints.

A model image is indexed by its thick scalene keypoint triangles, bucketed
by their angles and orientation and described by corner chrominance.
Frames are matched triangle by triangle and the object pose is found by
voting over similarity transforms.
"""
from .classifier import KeygraphIndex, Match, classify, load_index, save_index, train
from .config import PipelineConfig, load_config
from .estimator import KeygraphDetector
from .exceptions import KeygraphError
from .features import FeatureParams, extract_features, feature_distance
from .geometry import (
    Keygraph,
    KeygraphThresholds,
    Orientation,
    delaunay_triangulation,
    enumerate_training_keygraphs,
    frame_keygraphs,
    internal_angles,
    make_keygraph,
)
from .imaging import load_image, save_ppm, to_chroma, to_grayscale
from .keypoints import DetectorParams, Keypoint, detect_keypoints
from .partition import PartitionKey, neighbor_keys, partition_key
from .pipeline import FrameResult, detect_frame
from .pose import Detection, Pose, PoseAccumulator, best_pose, induce_pose

__version__ = "0.1.0"

__all__ = [
    "Detection",
    "DetectorParams",
    "FeatureParams",
    "FrameResult",
    "Keygraph",
    "KeygraphDetector",
    "KeygraphError",
    "KeygraphIndex",
    "KeygraphThresholds",
    "Keypoint",
    "Match",
    "Orientation",
    "PartitionKey",
    "PipelineConfig",
    "Pose",
    "PoseAccumulator",
    "best_pose",
    "classify",
    "delaunay_triangulation",
    "detect_frame",
    "detect_keypoints",
    "enumerate_training_keygraphs",
    "extract_features",
    "feature_distance",
    "frame_keygraphs",
    "induce_pose",
    "internal_angles",
    "load_config",
    "load_image",
    "load_index",
    "make_keygraph",
    "neighbor_keys",
    "partition_key",
    "save_index",
    "save_ppm",
    "to_chroma",
    "to_grayscale",
    "train",
]
