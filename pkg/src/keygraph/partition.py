"""Structural partition keys for triangle keygraphs.

A key is (orientation, bin of the largest angle, bin of the second largest
angle), with 36 half-open 5 degree bins over (0, 180). The smallest angle is
implied by the other two. Keys pack into integers in ``[0, 2592)``.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .geometry import Keygraph, KeygraphSet, Orientation

__all__ = [
    "N_BINS",
    "BIN_WIDTH",
    "KEYSPACE_SIZE",
    "PartitionKey",
    "angle_bin",
    "partition_key",
    "partition_keys",
    "neighbor_keys",
    "pack_key",
    "unpack_key",
]

N_BINS = 36
BIN_WIDTH = 180.0 / N_BINS
KEYSPACE_SIZE = 2 * N_BINS * N_BINS


class PartitionKey(NamedTuple):
    orientation: Orientation
    bin_largest: int
    bin_second: int

    def pack(self) -> int:
        return pack_key(self)


def angle_bin(angle):
    """Bin index ``floor(angle / 5)``, clipped to ``[0, 35]``."""
    return np.clip(np.floor(np.asarray(angle) / BIN_WIDTH), 0, N_BINS - 1).astype(np.int64)


def partition_key(kg: Keygraph) -> PartitionKey:
    # canonical keygraphs store angles in increasing order
    return PartitionKey(
        Orientation(int(kg.orientation)),
        int(angle_bin(kg.angles[2])),
        int(angle_bin(kg.angles[1])),
    )


def partition_keys(keygraphs: KeygraphSet) -> np.ndarray:
    """Packed keys for a whole keygraph set."""
    return (
        keygraphs.orientation.astype(np.int64) * N_BINS * N_BINS
        + angle_bin(keygraphs.angles[:, 2]) * N_BINS
        + angle_bin(keygraphs.angles[:, 1])
    )


def pack_key(key: PartitionKey) -> int:
    orientation, largest, second = key
    return int(orientation) * N_BINS * N_BINS + int(largest) * N_BINS + int(second)


def unpack_key(packed: int) -> PartitionKey:
    packed = int(packed)
    if not 0 <= packed < KEYSPACE_SIZE:
        raise ValueError(f"packed key {packed} outside [0, {KEYSPACE_SIZE})")
    orientation, rest = divmod(packed, N_BINS * N_BINS)
    largest, second = divmod(rest, N_BINS)
    return PartitionKey(Orientation(orientation), largest, second)


def neighbor_keys(key: PartitionKey, radius: int = 1) -> list[PartitionKey]:
    """Keys with the same orientation and both bins within ``radius``."""
    if radius not in (0, 1):
        raise ValueError(f"radius must be 0 or 1, got {radius}")
    orientation, largest, second = key
    out = []
    for bl in range(max(0, largest - radius), min(N_BINS - 1, largest + radius) + 1):
        for bs in range(max(0, second - radius), min(N_BINS - 1, second + radius) + 1):
            out.append(PartitionKey(Orientation(int(orientation)), bl, bs))
    return out
