"""Input validation helpers in the spirit of ``sklearn.utils.check_array``."""
from __future__ import annotations

import numpy as np

from .exceptions import ImageFormatError


def check_image(img, name: str = "image") -> np.ndarray:
    """Return ``img`` as a C-contiguous ``(height, width, 3)`` uint8 array.

    Float arrays are accepted if every value is an integer in [0, 255].
    """
    arr = np.asarray(img)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ImageFormatError(f"{name} must have shape (height, width, 3), got {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ImageFormatError(f"{name} must be at least 1x1")
    if arr.dtype != np.uint8:
        if not np.issubdtype(arr.dtype, np.number):
            raise ImageFormatError(f"{name} must be numeric, got {arr.dtype}")
        if np.any(arr < 0) or np.any(arr > 255) or np.any(arr != np.round(arr)):
            raise ImageFormatError(f"{name} values must be integers in [0, 255]")
        arr = arr.astype(np.uint8)
    return np.ascontiguousarray(arr)


def check_gray(gray, name: str = "gray") -> np.ndarray:
    arr = np.asarray(gray, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ImageFormatError(f"{name} must be a non-empty 2-D array, got {arr.shape}")
    return arr


def check_chroma(chroma, name: str = "chroma") -> np.ndarray:
    arr = np.asarray(chroma, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ImageFormatError(f"{name} must have shape (height, width, 2), got {arr.shape}")
    return arr


def check_points(points, name: str = "points") -> np.ndarray:
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"{name} must have shape (n, 2), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr
