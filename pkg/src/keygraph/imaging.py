"""Raster images, colour conversion and segment sampling.

Images are plain numpy arrays:

* colour images are ``(height, width, 3)`` uint8 arrays,
* grey images are ``(height, width)`` float arrays with luminance in [0, 1],
* chroma images are ``(height, width, 2)`` float arrays holding the hue and
  saturation of each pixel as the Cartesian pair ``(s cos h, s sin h)``.

Pixel ``(x, y)`` is column ``x``, row ``y``; pixel centres sit on integer
coordinates.
"""
from __future__ import annotations

import os
import re

import numpy as np

from ._validation import check_chroma, check_image
from .exceptions import ImageFormatError, OutOfBoundsError

__all__ = [
    "decode_ppm",
    "encode_ppm",
    "load_image",
    "save_ppm",
    "to_grayscale",
    "to_chroma",
    "rasterize_segment",
    "segment_pixels",
    "mean_chrominance_along",
    "segment_means",
    "round_half_up",
]

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])

_PPM_TOKEN = re.compile(rb"(?:\s|#[^\n]*\n)*(\d+)")


def decode_ppm(data: bytes) -> np.ndarray:
    """Decode a binary PPM (P6, maxval 255) byte string."""
    if not data.startswith(b"P6"):
        raise ImageFormatError("not a P6 PPM file")
    pos = 2
    fields = []
    for _ in range(3):
        m = _PPM_TOKEN.match(data, pos)
        if m is None:
            raise ImageFormatError("malformed PPM header")
        fields.append(int(m.group(1)))
        pos = m.end()
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise ImageFormatError(f"invalid PPM size {width}x{height}")
    if maxval != 255:
        raise ImageFormatError(f"unsupported PPM maxval {maxval} (only 255)")
    if pos >= len(data) or data[pos : pos + 1] not in (b" ", b"\t", b"\n", b"\r"):
        raise ImageFormatError("missing whitespace after PPM header")
    payload = data[pos + 1 :]
    expected = width * height * 3
    if len(payload) != expected:
        raise ImageFormatError(
            f"PPM payload has {len(payload)} bytes, header declares {expected}"
        )
    return np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3).copy()


def encode_ppm(img) -> bytes:
    img = check_image(img)
    height, width = img.shape[:2]
    return b"P6\n%d %d\n255\n" % (width, height) + img.tobytes()


def load_image(path) -> np.ndarray:
    """Read a PPM (P6) file, or a PNG if Pillow is installed."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data.startswith(b"P6"):
        return decode_ppm(data)
    if data.startswith(b"\x89PNG"):
        try:
            from PIL import Image as PILImage
        except ImportError as exc:  # pragma: no cover - depends on environment
            raise ImageFormatError("PNG support requires Pillow") from exc
        import io

        with PILImage.open(io.BytesIO(data)) as im:
            return np.asarray(im.convert("RGB"), dtype=np.uint8).copy()
    raise ImageFormatError(f"{os.fspath(path)}: unrecognised image format")


def save_ppm(img, path) -> None:
    """Write ``img`` as P6 atomically (temp file + rename)."""
    data = encode_ppm(img)
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def to_grayscale(img) -> np.ndarray:
    img = check_image(img)
    return img.astype(np.float64) @ LUMA_WEIGHTS / 255.0


def to_chroma(img) -> np.ndarray:
    """Hue/saturation of every pixel as a point in the unit disc.

    The HSV value channel is dropped, so scaling an RGB triple by a
    positive factor leaves the result unchanged.
    """
    rgb = check_image(img).astype(np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    mx = rgb.max(axis=2)
    mn = rgb.min(axis=2)
    delta = mx - mn
    chromatic = delta > 0
    safe_delta = np.where(chromatic, delta, 1.0)
    sat = np.where(chromatic, delta / np.where(mx > 0, mx, 1.0), 0.0)

    hue = np.where(
        mx == r,
        np.mod((g - b) / safe_delta, 6.0),
        np.where(mx == g, (b - r) / safe_delta + 2.0, (r - g) / safe_delta + 4.0),
    )
    hue = np.radians(60.0 * hue)
    out = np.empty(rgb.shape[:2] + (2,))
    out[..., 0] = sat * np.cos(hue)
    out[..., 1] = sat * np.sin(hue)
    return out


def round_half_up(v):
    """Round to the nearest integer, ties toward +inf (never banker's rounding)."""
    return np.floor(np.asarray(v, dtype=np.float64) + 0.5).astype(np.int64)


def _check_in_bounds(xs, ys, shape) -> None:
    if shape is None:
        return
    height, width = shape[:2]
    if np.any(xs < 0) or np.any(ys < 0) or np.any(xs >= width) or np.any(ys >= height):
        raise OutOfBoundsError(f"segment endpoint outside {width}x{height} image")


def segment_pixels(starts, ends, shape=None):
    """Pixels of many segments at once.

    Returns ``(xs, ys, offsets, counts)``: flat pixel coordinates for all
    segments concatenated, plus where each segment's run starts and how long
    it is. Each segment is walked from its lexicographically smaller rounded
    endpoint, so the pixel set does not depend on direction.
    """
    p0 = round_half_up(np.asarray(starts, dtype=np.float64).reshape(-1, 2))
    p1 = round_half_up(np.asarray(ends, dtype=np.float64).reshape(-1, 2))
    _check_in_bounds(p0[:, 0], p0[:, 1], shape)
    _check_in_bounds(p1[:, 0], p1[:, 1], shape)

    swap = (p1[:, 0] < p0[:, 0]) | ((p1[:, 0] == p0[:, 0]) & (p1[:, 1] < p0[:, 1]))
    a = np.where(swap[:, None], p1, p0)
    b = np.where(swap[:, None], p0, p1)
    d = b - a
    steps = np.abs(d).max(axis=1)
    counts = steps + 1
    offsets = np.cumsum(counts) - counts

    seg = np.repeat(np.arange(len(counts)), counts)
    k = np.arange(counts.sum()) - offsets[seg]
    n = np.maximum(steps, 1)[seg]
    # exact integer midpoint rounding of a + k*d/n
    xs = a[seg, 0] + (2 * k * d[seg, 0] + n) // (2 * n)
    ys = a[seg, 1] + (2 * k * d[seg, 1] + n) // (2 * n)
    return xs, ys, offsets, counts


def rasterize_segment(p0, p1, shape=None) -> list[tuple[int, int]]:
    """8-connected pixel walk from ``round(p0)`` to ``round(p1)`` inclusive.

    ``shape`` (an image shape) enables the bounds check.
    """
    xs, ys, _, _ = segment_pixels([p0], [p1], shape)
    pixels = list(zip(xs.tolist(), ys.tolist()))
    q0 = tuple(round_half_up(p0).tolist())
    if pixels[0] != q0:
        pixels.reverse()
    return pixels


def segment_means(chroma, starts, ends) -> np.ndarray:
    """Mean chroma pair over each segment; returns an ``(n, 2)`` array."""
    chroma = check_chroma(chroma)
    xs, ys, offsets, counts = segment_pixels(starts, ends, chroma.shape)
    if len(counts) == 0:
        return np.zeros((0, 2))
    sums = np.add.reduceat(chroma[ys, xs], offsets, axis=0)
    return sums / counts[:, None]


def mean_chrominance_along(chroma, p0, p1) -> tuple[float, float]:
    cx, cy = segment_means(chroma, [p0], [p1])[0]
    return float(cx), float(cy)
