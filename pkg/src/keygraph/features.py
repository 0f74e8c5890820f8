"""Corner chrominance features of triangle keygraphs.

From each vertex a bundle of rays is cast toward the chord joining the
points at ``fraction`` of the way along its two incident edges. Each ray
contributes the mean chroma pair of the pixels it crosses. Ray end points
are placed relative to edge lengths, so the vector is unaffected by scale
and rotation, and the chroma image already ignores brightness.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import check_chroma
from .exceptions import ParameterMismatchError
from .geometry import Keygraph, KeygraphSet
from .imaging import segment_means

__all__ = ["FeatureParams", "ray_segments", "extract_features", "extract_features_batch", "feature_distance"]

# the two other vertices of each canonical vertex, smaller angle first
_NEIGHBOURS = ((1, 2), (0, 2), (0, 1))


@dataclass(frozen=True)
class FeatureParams:
    fraction: float = 1.0 / 3.0
    rays_per_vertex: int = 3

    def __post_init__(self):
        if not 0.0 < self.fraction <= 0.5:
            raise ValueError(f"fraction must lie in (0, 0.5], got {self.fraction}")
        if self.rays_per_vertex < 1:
            raise ValueError("rays_per_vertex must be >= 1")

    @property
    def dimension(self) -> int:
        return 3 * self.rays_per_vertex * 2


def ray_segments(vertices: np.ndarray, params: FeatureParams) -> tuple[np.ndarray, np.ndarray]:
    """Start and end points of every ray, shaped ``(n, 3, R, 2)``.

    The chord end points are never used as targets: ray ``t`` aims at
    ``t / (R + 1)`` of the way along the chord, from the smaller-angle
    neighbour's side.
    """
    vertices = np.asarray(vertices, dtype=np.float64).reshape(-1, 3, 2)
    f = params.fraction
    r = params.rays_per_vertex
    t = (np.arange(1, r + 1) / (r + 1))[None, :, None]
    starts = np.empty(vertices.shape[:2] + (r, 2))
    ends = np.empty_like(starts)
    for i, (a, b) in enumerate(_NEIGHBOURS):
        v = vertices[:, i]
        pa = v + f * (vertices[:, a] - v)
        pb = v + f * (vertices[:, b] - v)
        starts[:, i] = v[:, None, :]
        ends[:, i] = pa[:, None, :] + t * (pb - pa)[:, None, :]
    return starts, ends


def extract_features_batch(chroma, keygraphs: KeygraphSet, params: FeatureParams = FeatureParams()) -> np.ndarray:
    """Feature matrix of shape ``(len(keygraphs), 6 * rays_per_vertex)``."""
    chroma = check_chroma(chroma)
    vertices = keygraphs.vertices if isinstance(keygraphs, KeygraphSet) else keygraphs
    vertices = np.asarray(vertices, dtype=np.float64).reshape(-1, 3, 2)
    starts, ends = ray_segments(vertices, params)
    means = segment_means(chroma, starts.reshape(-1, 2), ends.reshape(-1, 2))
    return means.reshape(len(vertices), params.dimension)


def extract_features(chroma, kg: Keygraph, params: FeatureParams = FeatureParams()) -> np.ndarray:
    return extract_features_batch(chroma, np.asarray([kg.vertices]), params)[0]


def feature_distance(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ParameterMismatchError(f"feature length mismatch: {u.shape} vs {v.shape}")
    return float(np.sqrt(np.sum((u - v) ** 2)))
