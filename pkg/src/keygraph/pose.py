"""Similarity poses, Hough-style pose voting and peak refinement."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import DegenerateTriangleError

__all__ = [
    "Pose",
    "PoseQuantization",
    "InlierTolerance",
    "PoseAccumulator",
    "Detection",
    "induce_pose",
    "vote",
    "best_pose",
    "rotation_difference",
    "pose_agrees",
    "detection_to_dict",
]


@dataclass(frozen=True)
class Pose:
    """Map ``p -> scale * R(rotation) p + (tx, ty)`` from model to frame."""

    tx: float
    ty: float
    scale: float
    rotation: float

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")

    def apply(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        theta = math.radians(self.rotation)
        c, s = math.cos(theta), math.sin(theta)
        rot = self.scale * np.array([[c, -s], [s, c]])
        return pts @ rot.T + np.array([self.tx, self.ty])

    def inverse(self) -> "Pose":
        inv_scale = 1.0 / self.scale
        rotation = (-self.rotation) % 360.0
        tx, ty = Pose(0.0, 0.0, inv_scale, rotation).apply([(-self.tx, -self.ty)])[0]
        return Pose(float(tx), float(ty), inv_scale, rotation)

    def to_dict(self) -> dict:
        return {"tx": self.tx, "ty": self.ty, "scale": self.scale, "rotation": self.rotation}


def induce_pose(model_pts, frame_pts) -> Pose:
    """Least-squares similarity taking ``model_pts`` onto ``frame_pts``.

    Works in the complex plane: with centred coordinates ``m`` and ``f``,
    ``scale * exp(i rotation) = sum(f * conj(m)) / sum(|m|^2)``. Exact for
    any number of correspondences related by a true similarity.
    """
    m = np.asarray(model_pts, dtype=np.float64).reshape(-1, 2)
    f = np.asarray(frame_pts, dtype=np.float64).reshape(-1, 2)
    if m.shape != f.shape or len(m) < 2:
        raise DegenerateTriangleError("need matching point lists of length >= 2")
    mc = m[:, 0] + 1j * m[:, 1]
    fc = f[:, 0] + 1j * f[:, 1]
    m_bar, f_bar = mc.mean(), fc.mean()
    dm, df = mc - m_bar, fc - f_bar
    spread = float(np.sum(np.abs(dm) ** 2))
    if spread <= 1e-12 or float(np.sum(np.abs(df) ** 2)) <= 1e-12:
        raise DegenerateTriangleError("correspondence has no spatial extent")
    z = np.sum(df * np.conj(dm)) / spread
    t = f_bar - z * m_bar
    rotation = math.degrees(math.atan2(z.imag, z.real)) % 360.0
    # keep [0, 360) after float wrap-around of tiny negative angles
    if rotation >= 360.0:
        rotation = 0.0
    return Pose(float(t.real), float(t.imag), float(abs(z)), rotation)


def rotation_difference(a: float, b: float) -> float:
    """Circular distance between two angles in degrees, in [0, 180]."""
    d = abs(a - b) % 360.0
    return min(d, 360.0 - d)


@dataclass(frozen=True)
class PoseQuantization:
    translation_bin: float = 16.0
    scale_factor: float = 1.25
    rotation_bin: float = 15.0
    min_scale: float = 0.25
    max_scale: float = 4.0

    def __post_init__(self):
        if self.translation_bin <= 0 or self.rotation_bin <= 0:
            raise ValueError("bin sizes must be positive")
        if self.scale_factor <= 1:
            raise ValueError("scale_factor must exceed 1")
        if not 0 < self.min_scale < self.max_scale:
            raise ValueError("need 0 < min_scale < max_scale")


@dataclass(frozen=True)
class InlierTolerance:
    translation: float = 16.0
    scale_ratio: float = 1.25
    rotation: float = 15.0


def pose_agrees(pose: Pose, ref: Pose, tol: InlierTolerance, anchor=(0.0, 0.0)) -> bool:
    """Whether ``pose`` lies within ``tol`` of ``ref``.

    Translation is compared through where each pose sends ``anchor``.
    """
    pa = pose.apply([anchor])[0]
    ra = ref.apply([anchor])[0]
    if math.hypot(*(pa - ra)) > tol.translation:
        return False
    ratio = pose.scale / ref.scale
    if not 1.0 / tol.scale_ratio <= ratio <= tol.scale_ratio:
        return False
    return rotation_difference(pose.rotation, ref.rotation) <= tol.rotation


class PoseAccumulator:
    """Sparse vote table over quantised (x, y, log-scale, rotation) cells.

    The translation axes bin the frame position of ``anchor`` under each
    pose. With the default anchor (the model origin) that is just
    ``(tx, ty)``; anchoring at the model centre decouples translation bins
    from rotation error.
    """

    def __init__(
        self,
        quantization: PoseQuantization = PoseQuantization(),
        anchor=(0.0, 0.0),
        spread: bool = False,
    ):
        self.quantization = quantization
        self.anchor = (float(anchor[0]), float(anchor[1]))
        self.spread = bool(spread)
        self.cells: dict[tuple[int, int, int, int], list] = {}

    def _coordinates(self, pose: Pose) -> Optional[np.ndarray]:
        """Continuous bin coordinates of ``pose``; None outside the scale range."""
        q = self.quantization
        if not q.min_scale <= pose.scale <= q.max_scale:
            return None
        ax, ay = pose.apply([self.anchor])[0]
        return np.array(
            [
                ax / q.translation_bin,
                ay / q.translation_bin,
                math.log(pose.scale) / math.log(q.scale_factor),
                pose.rotation / q.rotation_bin,
            ]
        )

    def _wrap(self, cell) -> tuple[int, int, int, int]:
        n_rot = int(round(360.0 / self.quantization.rotation_bin))
        return (int(cell[0]), int(cell[1]), int(cell[2]), int(cell[3]) % n_rot)

    def cell_of(self, pose: Pose) -> Optional[tuple[int, int, int, int]]:
        coords = self._coordinates(pose)
        if coords is None:
            return None
        return self._wrap(np.floor(coords))

    def cells_of(self, pose: Pose) -> list[tuple[int, int, int, int]]:
        """Cells receiving a vote for ``pose``.

        Without spreading this is the containing cell. With spreading it is
        the two nearest bins along every axis (16 cells), so a tight cluster
        of poses always shares at least one cell even across bin edges.
        """
        coords = self._coordinates(pose)
        if coords is None:
            return []
        if not self.spread:
            return [self._wrap(np.floor(coords))]
        lo = np.floor(coords - 0.5)
        return [self._wrap(lo + np.array(offset)) for offset in itertools.product((0, 1), repeat=4)]

    def vote(self, match) -> bool:
        """Add ``match`` (anything with an ``induced_pose``); False if out of range."""
        cells = self.cells_of(match.induced_pose)
        for cell in cells:
            self.cells.setdefault(cell, []).append(match)
        return bool(cells)

    def counts(self) -> dict[tuple[int, int, int, int], int]:
        return {cell: len(ms) for cell, ms in self.cells.items()}

    def merge(self, other: "PoseAccumulator") -> "PoseAccumulator":
        """Cell-wise union of two accumulators over disjoint match sets."""
        if (other.quantization, other.anchor, other.spread) != (self.quantization, self.anchor, self.spread):
            raise ValueError("cannot merge accumulators with different quantization")
        out = PoseAccumulator(self.quantization, self.anchor, self.spread)
        for src in (self, other):
            for cell, ms in src.cells.items():
                out.cells.setdefault(cell, []).extend(ms)
        return out

    def matches(self) -> list:
        """Every distinct voting match, in first-seen cell order."""
        seen: set[int] = set()
        out = []
        for cell in sorted(self.cells):
            for m in self.cells[cell]:
                if id(m) not in seen:
                    seen.add(id(m))
                    out.append(m)
        return out


def vote(acc: PoseAccumulator, match) -> PoseAccumulator:
    acc.vote(match)
    return acc


@dataclass
class Detection:
    pose: Pose
    votes: int
    inliers: list = field(default_factory=list)


def _refine(matches) -> Pose:
    model = np.concatenate([np.asarray(m.model_vertices, dtype=np.float64) for m in matches])
    frame = np.concatenate([np.asarray(m.frame_keygraph.vertices, dtype=np.float64) for m in matches])
    return induce_pose(model, frame)


def best_pose(
    acc: PoseAccumulator, min_votes: int = 8, tolerance: InlierTolerance = InlierTolerance()
) -> Optional[Detection]:
    """The most voted cell, refined by least squares, or ``None``.

    Ties between equally voted cells go to the lexicographically smallest
    cell. The refined pose is fitted to every vertex correspondence in the
    winning cell; inliers are then all accumulated matches agreeing with
    it, and the fit is repeated once over those inliers.
    """
    if not acc.cells:
        return None
    cell = min(acc.cells, key=lambda c: (-len(acc.cells[c]), c))
    votes = len(acc.cells[cell])
    if votes < min_votes:
        return None
    pose = _refine(acc.cells[cell])
    everything = acc.matches()
    inliers = [m for m in everything if pose_agrees(m.induced_pose, pose, tolerance, acc.anchor)]
    if inliers:
        pose = _refine(inliers)
        inliers = [m for m in everything if pose_agrees(m.induced_pose, pose, tolerance, acc.anchor)]
    return Detection(pose=pose, votes=votes, inliers=inliers)


def detection_to_dict(detection: Optional[Detection], model_size) -> dict:
    """JSON-ready summary; ``quad`` holds the projected model corners."""
    if detection is None:
        return {"found": False, "pose": None, "votes": 0, "inlier_count": 0, "quad": None}
    width, height = model_size
    corners = [(0.0, 0.0), (width - 1.0, 0.0), (width - 1.0, height - 1.0), (0.0, height - 1.0)]
    quad = detection.pose.apply(corners)
    return {
        "found": True,
        "pose": detection.pose.to_dict(),
        "votes": int(detection.votes),
        "inlier_count": len(detection.inliers),
        "quad": [[float(x), float(y)] for x, y in quad],
    }
