"""Raster helpers: decoding, bilinear resampling, HSV hue.

The bilinear convention is pinned here because featurization must match a
straight-line reference implementation: destination pixel centers map to
source coordinates via ``src = (dst + 0.5) * size_ratio - 0.5``, clamped to
the valid range, and the four neighbors blend with the usual weights.
"""

from __future__ import annotations

import io

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DecodeError


def decode_image(data: bytes, mode: str) -> np.ndarray:
    """Decode image bytes to a uint8 (H, W, len(mode)) array."""
    try:
        with Image.open(io.BytesIO(data)) as img:
            return np.asarray(img.convert(mode), dtype=np.uint8)
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise DecodeError(f"cannot decode image: {exc}") from exc


def decode_rgb(data: bytes) -> np.ndarray:
    return decode_image(data, "RGB")


def decode_rgba(data: bytes) -> np.ndarray:
    return decode_image(data, "RGBA")


def resize_bilinear(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resample to (out_h, out_w); float64 in, float64 out.

    Point-sampled with half-pixel centers (no area averaging), so the
    result is exactly reproducible by four-neighbor interpolation and is
    the identity when the size is unchanged.
    """
    arr = np.asarray(img, dtype=np.float64)
    squeeze = arr.ndim == 2
    if squeeze:
        arr = arr[:, :, None]
    in_h, in_w, _ = arr.shape

    ys = (np.arange(out_h) + 0.5) * (in_h / out_h) - 0.5
    xs = (np.arange(out_w) + 0.5) * (in_w / out_w) - 0.5
    ys = np.clip(ys, 0.0, in_h - 1.0)
    xs = np.clip(xs, 0.0, in_w - 1.0)

    y0 = np.floor(ys).astype(np.int64)
    x0 = np.floor(xs).astype(np.int64)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    wy = (ys - y0)[:, None, None]
    wx = (xs - x0)[None, :, None]

    top = arr[y0][:, x0] * (1.0 - wx) + arr[y0][:, x1] * wx
    bottom = arr[y1][:, x0] * (1.0 - wx) + arr[y1][:, x1] * wx
    out = top * (1.0 - wy) + bottom * wy
    return out[:, :, 0] if squeeze else out


def rgb_to_hue_degrees(rgb: np.ndarray) -> np.ndarray:
    """HSV hue in degrees per pixel (0 where the pixel is achromatic)."""
    arr = np.asarray(rgb, dtype=np.float64)
    r, g, b = arr[..., 0], arr[..., 1], arr[..., 2]
    maxc = np.maximum(np.maximum(r, g), b)
    minc = np.minimum(np.minimum(r, g), b)
    delta = maxc - minc
    hue = np.zeros_like(maxc)
    nz = delta > 0
    rmax = nz & (maxc == r)
    gmax = nz & (maxc == g) & ~rmax
    bmax = nz & ~rmax & ~gmax
    hue[rmax] = ((g - b)[rmax] / delta[rmax]) % 6.0
    hue[gmax] = (b - r)[gmax] / delta[gmax] + 2.0
    hue[bmax] = (r - g)[bmax] / delta[bmax] + 4.0
    return hue * 60.0
