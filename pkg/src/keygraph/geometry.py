"""Triangle keygraphs: angles, the thick-scalene filter and enumeration.

A keygraph is a triangle of keypoints stored in canonical order, i.e. its
vertices sorted by increasing internal angle. Because accepted triangles
are scalene, that order is unique, so two matched keygraphs always have an
unambiguous vertex correspondence.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np
from scipy.spatial import Delaunay, QhullError

from ._validation import check_points
from .exceptions import DegenerateTriangleError, TooFewPointsError

__all__ = [
    "Orientation",
    "KeygraphThresholds",
    "Keygraph",
    "KeygraphSet",
    "internal_angles",
    "triangle_angles",
    "make_keygraph",
    "build_keygraphs",
    "enumerate_training_keygraphs",
    "delaunay_triangulation",
    "frame_keygraphs",
]

MIN_AREA = 1e-9


class Orientation(enum.IntEnum):
    CW = 0
    CCW = 1


@dataclass(frozen=True)
class KeygraphThresholds:
    min_angle: float = 5.0
    min_angle_gap: float = 5.0
    min_vertex_distance: float = 10.0

    def __post_init__(self):
        if min(self.min_angle, self.min_angle_gap, self.min_vertex_distance) < 0:
            raise ValueError("keygraph thresholds must be non-negative")


@dataclass(frozen=True)
class Keygraph:
    vertex_ids: tuple[int, int, int]
    vertices: tuple[tuple[float, float], ...]
    angles: tuple[float, float, float]
    orientation: Orientation


def _as_points(points) -> np.ndarray:
    if len(points) and hasattr(points[0], "score"):
        points = [(kp.x, kp.y) for kp in points]
    return check_points(np.asarray(points, dtype=np.float64).reshape(-1, 2))


def triangle_angles(tri: np.ndarray) -> np.ndarray:
    """Internal angles in degrees of a ``(n, 3, 2)`` stack of triangles.

    Column ``i`` is the angle at vertex ``i``. Uses ``atan2(|cross|, dot)``,
    which stays accurate for very thin triangles.
    """
    tri = np.asarray(tri, dtype=np.float64)
    out = np.empty(tri.shape[:-1])
    for i in range(3):
        u = tri[:, (i + 1) % 3] - tri[:, i]
        v = tri[:, (i + 2) % 3] - tri[:, i]
        cross = u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]
        dot = u[:, 0] * v[:, 0] + u[:, 1] * v[:, 1]
        out[:, i] = np.degrees(np.arctan2(np.abs(cross), dot))
    return out


def _signed_double_area(tri: np.ndarray) -> np.ndarray:
    u = tri[:, 1] - tri[:, 0]
    v = tri[:, 2] - tri[:, 0]
    return u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]


def internal_angles(p0, p1, p2) -> tuple[float, float, float]:
    tri = np.array([[p0, p1, p2]], dtype=np.float64)
    if abs(_signed_double_area(tri)[0]) / 2.0 <= MIN_AREA:
        raise DegenerateTriangleError(f"degenerate triangle {p0}, {p1}, {p2}")
    a0, a1, a2 = triangle_angles(tri)[0]
    return float(a0), float(a1), float(a2)


class KeygraphSet:
    """Column-oriented collection of canonical keygraphs.

    Behaves like a sequence of :class:`Keygraph` while keeping the data in
    arrays for vectorised feature extraction.
    """

    def __init__(self, ids, vertices, angles, orientation):
        self.ids = np.asarray(ids, dtype=np.int64).reshape(-1, 3)
        self.vertices = np.asarray(vertices, dtype=np.float64).reshape(-1, 3, 2)
        self.angles = np.asarray(angles, dtype=np.float64).reshape(-1, 3)
        self.orientation = np.asarray(orientation, dtype=np.int8).reshape(-1)

    @classmethod
    def empty(cls) -> "KeygraphSet":
        return cls(np.zeros((0, 3)), np.zeros((0, 3, 2)), np.zeros((0, 3)), np.zeros(0))

    @classmethod
    def from_keygraphs(cls, keygraphs) -> "KeygraphSet":
        keygraphs = list(keygraphs)
        if not keygraphs:
            return cls.empty()
        return cls(
            [kg.vertex_ids for kg in keygraphs],
            [kg.vertices for kg in keygraphs],
            [kg.angles for kg in keygraphs],
            [int(kg.orientation) for kg in keygraphs],
        )

    def __len__(self) -> int:
        return len(self.ids)

    def __getitem__(self, i) -> Keygraph:
        if isinstance(i, slice):
            return KeygraphSet(self.ids[i], self.vertices[i], self.angles[i], self.orientation[i])
        return Keygraph(
            vertex_ids=tuple(int(v) for v in self.ids[i]),
            vertices=tuple((float(x), float(y)) for x, y in self.vertices[i]),
            angles=tuple(float(a) for a in self.angles[i]),
            orientation=Orientation(int(self.orientation[i])),
        )

    def __iter__(self) -> Iterator[Keygraph]:
        for i in range(len(self)):
            yield self[i]

    def id_triples(self) -> set[tuple[int, int, int]]:
        """Vertex ids of every keygraph as sorted tuples."""
        return {tuple(sorted(row)) for row in self.ids.tolist()}


def build_keygraphs(points, triples, thresholds: KeygraphThresholds) -> KeygraphSet:
    """Filter candidate triples down to canonical thick scalene keygraphs."""
    pts = _as_points(points)
    triples = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
    if len(triples) == 0:
        return KeygraphSet.empty()
    tri = pts[triples]

    keep = np.abs(_signed_double_area(tri)) / 2.0 > MIN_AREA
    for i, j in ((0, 1), (1, 2), (0, 2)):
        keep &= np.hypot(*(tri[:, i] - tri[:, j]).T) >= thresholds.min_vertex_distance
    triples, tri = triples[keep], tri[keep]

    angles = triangle_angles(tri)
    order = np.argsort(angles, axis=1, kind="stable")
    angles = np.take_along_axis(angles, order, axis=1)
    keep = angles[:, 0] >= thresholds.min_angle
    keep &= np.diff(angles, axis=1).min(axis=1) >= thresholds.min_angle_gap

    order, angles = order[keep], angles[keep]
    ids = np.take_along_axis(triples[keep], order, axis=1)
    verts = np.take_along_axis(tri[keep], order[:, :, None], axis=1)
    orientation = np.where(_signed_double_area(verts) > 0, Orientation.CCW, Orientation.CW)
    return KeygraphSet(ids, verts, angles, orientation)


def make_keygraph(ids, points, thresholds: KeygraphThresholds = KeygraphThresholds()) -> Optional[Keygraph]:
    """Canonical keygraph for three vertices, or ``None`` if rejected.

    ``points`` holds the positions of ``ids`` in the same order.
    """
    ids = tuple(int(i) for i in ids)
    if len(ids) != 3 or len(set(ids)) != 3:
        raise ValueError(f"need three distinct vertex ids, got {ids}")
    pts = _as_points(points)
    if pts.shape != (3, 2):
        raise ValueError("need exactly three points")
    kgs = build_keygraphs(pts, [[0, 1, 2]], thresholds)
    if len(kgs) == 0:
        return None
    kg = kgs[0]
    return Keygraph(tuple(ids[i] for i in kg.vertex_ids), kg.vertices, kg.angles, kg.orientation)


def enumerate_training_keygraphs(
    points, thresholds: KeygraphThresholds = KeygraphThresholds(), stats: Optional[dict] = None
) -> KeygraphSet:
    """All unordered triples ``i < j < k`` passing the keygraph filter.

    Output is ordered by the sorted id triple. ``stats['examined']`` is
    incremented by the number of triples considered.
    """
    pts = _as_points(points)
    n = len(pts)
    if n < 3:
        raise TooFewPointsError(f"need at least 3 keypoints, got {n}")
    if stats is not None:
        stats["examined"] = stats.get("examined", 0) + n * (n - 1) * (n - 2) // 6

    far = np.hypot(*(pts[:, None, :] - pts[None, :, :]).transpose(2, 0, 1))
    far = far >= thresholds.min_vertex_distance
    parts = []
    for i in range(n - 2):
        rest = np.arange(i + 1, n)
        rest = rest[far[i, rest]]
        if len(rest) < 2:
            continue
        a, b = np.triu_indices(len(rest), 1)
        j, k = rest[a], rest[b]
        ok = far[j, k]
        if not ok.any():
            continue
        triples = np.column_stack([np.full(ok.sum(), i), j[ok], k[ok]])
        kgs = build_keygraphs(pts, triples, thresholds)
        if len(kgs):
            parts.append(kgs)
    if not parts:
        return KeygraphSet.empty()
    return KeygraphSet(
        np.concatenate([p.ids for p in parts]),
        np.concatenate([p.vertices for p in parts]),
        np.concatenate([p.angles for p in parts]),
        np.concatenate([p.orientation for p in parts]),
    )


def delaunay_triangulation(points) -> np.ndarray:
    """Delaunay triangles as an ``(t, 3)`` array of point indices.

    Rows are sorted index triples in lexicographic order. Cocircular
    configurations admit several valid answers; any one may be returned.
    """
    pts = _as_points(points)
    if len(pts) < 3:
        raise TooFewPointsError(f"need at least 3 points, got {len(pts)}")
    try:
        tri = Delaunay(pts)
    except QhullError as exc:
        raise TooFewPointsError("points are collinear or otherwise degenerate") from exc
    simplices = np.sort(tri.simplices.astype(np.int64), axis=1)
    simplices = simplices[np.lexsort(simplices.T[::-1])]
    area = np.abs(_signed_double_area(pts[simplices])) / 2.0
    return simplices[area > 0]


def frame_keygraphs(
    points, thresholds: KeygraphThresholds = KeygraphThresholds(), stats: Optional[dict] = None
) -> KeygraphSet:
    """Thick scalene triangles of the Delaunay triangulation.

    ``stats['examined']`` is incremented by the number of Delaunay
    triangles examined, at most ``2n - 5``.
    """
    triangles = delaunay_triangulation(points)
    if stats is not None:
        stats["examined"] = stats.get("examined", 0) + len(triangles)
    return build_keygraphs(points, triangles, thresholds)
