"""Partition-bucketed keygraph index and nearest-neighbour classification."""
from __future__ import annotations

import json
import os
import types
import zlib
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from ._validation import check_image
from .config import PipelineConfig
from .exceptions import (
    IndexCorruptionError,
    IndexVersionError,
    NoKeygraphsError,
    ParameterMismatchError,
    TooFewKeypointsError,
)
from .features import extract_features_batch
from .geometry import Keygraph, enumerate_training_keygraphs
from .imaging import to_chroma, to_grayscale
from .keypoints import detect_keypoints, keypoints_array
from .partition import neighbor_keys, pack_key, partition_key, partition_keys
from .pose import Pose, induce_pose

__all__ = [
    "INDEX_VERSION",
    "Bucket",
    "KeygraphIndex",
    "Match",
    "train",
    "classify",
    "save_index",
    "load_index",
    "dumps_index",
    "loads_index",
]

INDEX_VERSION = 1


class Bucket(NamedTuple):
    ids: np.ndarray  # (n,) model keygraph ids, ascending
    features: np.ndarray  # (n, dim)
    vertices: np.ndarray  # (n, 3, 2) canonical model vertex positions


@dataclass
class Match:
    frame_keygraph: Keygraph
    model_keygraph_id: int
    distance: float
    induced_pose: Pose
    model_vertices: tuple


def _frozen(arr, dtype) -> np.ndarray:
    arr = np.array(arr, dtype=dtype)
    arr.setflags(write=False)
    return arr


class KeygraphIndex:
    """Read-only store of model keygraph features grouped by partition key."""

    def __init__(self, buckets: dict, params: dict, model_size, feature_dim: int):
        frozen = {}
        for key in sorted(buckets):
            b = buckets[key]
            order = np.argsort(b.ids, kind="stable")
            frozen[int(key)] = Bucket(
                _frozen(np.asarray(b.ids)[order], np.int64),
                _frozen(np.asarray(b.features, dtype=np.float64).reshape(-1, feature_dim)[order], np.float64),
                _frozen(np.asarray(b.vertices, dtype=np.float64).reshape(-1, 3, 2)[order], np.float64),
            )
        self.buckets = types.MappingProxyType(frozen)
        self.params = types.MappingProxyType(dict(params))
        self.model_size = (int(model_size[0]), int(model_size[1]))
        self.feature_dim = int(feature_dim)

    @property
    def config(self) -> PipelineConfig:
        return PipelineConfig.from_dict(dict(self.params))

    def __len__(self) -> int:
        return sum(len(b.ids) for b in self.buckets.values())

    def bucket_sizes(self) -> dict[int, int]:
        return {k: len(b.ids) for k, b in self.buckets.items()}

    def __eq__(self, other) -> bool:
        if not isinstance(other, KeygraphIndex):
            return NotImplemented
        if (
            dict(self.params) != dict(other.params)
            or self.model_size != other.model_size
            or self.feature_dim != other.feature_dim
            or set(self.buckets) != set(other.buckets)
        ):
            return False
        return all(
            all(np.array_equal(x, y) for x, y in zip(self.buckets[k], other.buckets[k]))
            for k in self.buckets
        )

    __hash__ = None


def train(model, config: PipelineConfig = PipelineConfig(), stats: Optional[dict] = None) -> KeygraphIndex:
    """Build the keygraph index for a single model image.

    ``stats`` (if given) receives ``keypoints`` and ``keygraphs`` counts.
    """
    model = check_image(model, "model")
    keypoints = detect_keypoints(to_grayscale(model), config.detector_params(model=True))
    if stats is not None:
        stats["keypoints"] = len(keypoints)
    if len(keypoints) < 3:
        raise TooFewKeypointsError(f"too few keypoints in model ({len(keypoints)})")
    keygraphs = enumerate_training_keygraphs(keypoints_array(keypoints), config.thresholds())
    if stats is not None:
        stats["keygraphs"] = len(keygraphs)
    if len(keygraphs) == 0:
        raise NoKeygraphsError("no thick scalene keygraphs in model")

    params = config.feature_params()
    features = extract_features_batch(to_chroma(model), keygraphs, params)
    keys = partition_keys(keygraphs)
    ids = np.arange(len(keygraphs))
    buckets = {}
    for key in np.unique(keys):
        sel = keys == key
        buckets[int(key)] = Bucket(ids[sel], features[sel], keygraphs.vertices[sel])
    height, width = model.shape[:2]
    return KeygraphIndex(buckets, config.to_dict(), (width, height), params.dimension)


def classify(
    index: KeygraphIndex,
    frame_kg: Keygraph,
    fv,
    tau: float = 0.6,
    radius: int = 1,
    stats: Optional[dict] = None,
) -> Optional[Match]:
    """Nearest model keygraph in the neighbouring buckets, if within ``tau``.

    Ties on distance go to the smaller model keygraph id. ``stats['comparisons']``
    counts feature distances evaluated.
    """
    fv = np.asarray(fv, dtype=np.float64)
    if fv.shape != (index.feature_dim,):
        raise ParameterMismatchError(
            f"feature dimension {fv.shape} does not match index dimension {index.feature_dim}"
        )
    best = None  # (distance, id, vertices)
    for key in neighbor_keys(partition_key(frame_kg), radius):
        bucket = index.buckets.get(pack_key(key))
        if bucket is None:
            continue
        d = np.sqrt(np.sum((bucket.features - fv) ** 2, axis=1))
        if stats is not None:
            stats["comparisons"] = stats.get("comparisons", 0) + len(d)
        i = int(np.argmin(d))
        cand = (float(d[i]), int(bucket.ids[i]), bucket.vertices[i])
        if best is None or cand[:2] < best[:2]:
            best = cand
    if best is None or best[0] > tau:
        return None
    distance, model_id, model_vertices = best
    return Match(
        frame_keygraph=frame_kg,
        model_keygraph_id=model_id,
        distance=distance,
        induced_pose=induce_pose(model_vertices, frame_kg.vertices),
        model_vertices=tuple(map(tuple, model_vertices.tolist())),
    )


def _payload(index: KeygraphIndex) -> dict:
    return {
        "version": INDEX_VERSION,
        "params": dict(index.params),
        "model_size": list(index.model_size),
        "feature_dim": index.feature_dim,
        "buckets": [
            {
                "key": key,
                "entries": [
                    {"id": int(i), "vertices": v.tolist(), "feature": f.tolist()}
                    for i, v, f in zip(b.ids, b.vertices, b.features)
                ],
            }
            for key, b in index.buckets.items()
        ],
    }


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def dumps_index(index: KeygraphIndex) -> str:
    payload = _payload(index)
    payload["checksum"] = zlib.crc32(_canonical(payload).encode("utf-8"))
    return _canonical(payload)


def loads_index(text) -> KeygraphIndex:
    try:
        data = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise IndexCorruptionError(f"index is not valid JSON: {exc}") from exc
    if not isinstance(data, dict) or "version" not in data:
        raise IndexCorruptionError("index header missing")
    if data["version"] != INDEX_VERSION:
        raise IndexVersionError(f"unsupported index version {data['version']!r}")
    checksum = data.pop("checksum", None)
    if checksum != zlib.crc32(_canonical(data).encode("utf-8")):
        raise IndexCorruptionError("index checksum mismatch")
    try:
        dim = int(data["feature_dim"])
        buckets = {}
        for b in data["buckets"]:
            entries = b["entries"]
            buckets[int(b["key"])] = Bucket(
                np.array([e["id"] for e in entries], dtype=np.int64),
                np.array([e["feature"] for e in entries], dtype=np.float64).reshape(-1, dim),
                np.array([e["vertices"] for e in entries], dtype=np.float64).reshape(-1, 3, 2),
            )
        return KeygraphIndex(buckets, data["params"], data["model_size"], dim)
    except (KeyError, TypeError, ValueError) as exc:
        raise IndexCorruptionError(f"malformed index body: {exc}") from exc


def save_index(index: KeygraphIndex, path) -> None:
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(dumps_index(index))
    os.replace(tmp, path)


def load_index(path) -> KeygraphIndex:
    with open(path, "rb") as fh:
        data = fh.read()
    return loads_index(data)
