"""Deterministic mock generation models.

These stand in for the four remote stages (category LLM, text-to-image,
background removal, relighting) during tests and desk-scale runs. They are
pure functions of their request fields, use only integer arithmetic, and
encode through the canonical PNG writer — so any faithful reimplementation
(the HTTP sidecar ships one) produces byte-identical responses. The shared
golden files under ``conformance/`` pin this contract.

Rendering scheme:

* the prompt hash picks a shape family and a base palette (stable per
  category), the request seed drives color jitter and geometry, so two
  seeds for one category give two visibly distinct object instances;
* objects are drawn solid on a reserved near-white background color, which
  makes the mock background remover exact: alpha is 255 wherever a pixel
  differs from the reserved color;
* relighting alpha-selects the foreground over a seeded two-color gradient
  with a global tint applied to the background only, so foreground pixels
  survive bit-for-bit.
"""

from __future__ import annotations

import numpy as np

from ..imaging import decode_rgb, decode_rgba
from ..rng import MASK64, SplitMix64, fnv1a64
from .pngio import encode_png

IMG_SIDE = 64
CLEAN_BG = (236, 236, 236)
_RELIGHT_SALT = 0xA5C10B5E11F7D003

_PALETTES = (
    (190, 60, 60),
    (60, 170, 60),
    (70, 90, 190),
    (190, 160, 50),
    (160, 70, 190),
    (60, 180, 180),
    (190, 110, 160),
    (130, 130, 60),
)

_NOUNS = (
    "lantern", "kettle", "stool", "helmet", "compass", "goblet", "satchel",
    "whistle", "ladder", "mirror", "anchor", "basket", "candle", "drum",
    "easel", "funnel", "gourd", "hammock", "inkwell", "jug", "kite",
    "locket", "mallet", "nutcracker", "oar", "pitcher", "quilt", "rattle",
    "sundial", "trowel", "urn", "violin",
)

_ADJECTIVES = (
    "amber", "braided", "carved", "dusty", "enamel", "folded", "gilded",
    "hollow", "ivory", "jade", "knotted", "lacquered", "marbled", "narrow",
    "oblong", "painted", "quilted", "ribbed", "speckled", "tapered",
    "upright", "varnished", "woven", "zigzag",
)


def mock_categories(domain: str, count: int) -> list[str]:
    """Deterministic vocabulary of ``count`` category names for a domain."""
    if count < 1:
        raise ValueError("count must be >= 1")
    offset = fnv1a64(domain) % len(_NOUNS)
    names = []
    for i in range(count):
        noun = _NOUNS[(offset + i) % len(_NOUNS)]
        if i < len(_NOUNS):
            name = noun
        else:
            j = i - len(_NOUNS)
            adjective = _ADJECTIVES[(j // len(_NOUNS)) % len(_ADJECTIVES)]
            cycle = j // (len(_NOUNS) * len(_ADJECTIVES))
            name = f"{adjective} {noun}"
            if cycle > 0:
                name = f"{name} {cycle + 1}"
        names.append(name)
    return names


def _instance_stream(prompt: str, seed: int, steps: int) -> SplitMix64:
    mixed = fnv1a64(prompt) ^ (seed & MASK64) ^ ((steps * 0x9E3779B97F4A7C15) & MASK64)
    return SplitMix64(mixed)


def mock_generate(prompt: str, seed: int, steps: int = 1) -> bytes:
    """Render one object instance as canonical PNG bytes (RGB 64x64)."""
    h = fnv1a64(prompt)
    shape_kind = h % 4
    base = _PALETTES[(h >> 8) % len(_PALETTES)]
    rng = _instance_stream(prompt, seed, steps)
    color = tuple(base[c] - 40 + rng.randbelow(81) for c in range(3))
    cx = 24 + rng.randbelow(17)
    cy = 24 + rng.randbelow(17)
    half_w = 12 + rng.randbelow(11)
    half_h = 12 + rng.randbelow(11)

    ys, xs = np.mgrid[0:IMG_SIDE, 0:IMG_SIDE]
    dx = xs.astype(np.int64) - cx
    dy = ys.astype(np.int64) - cy
    if shape_kind == 0:  # ellipse
        inside = dx * dx * half_h * half_h + dy * dy * half_w * half_w \
            <= half_w * half_w * half_h * half_h
    elif shape_kind == 1:  # rectangle
        inside = (np.abs(dx) <= half_w) & (np.abs(dy) <= half_h)
    elif shape_kind == 2:  # upward triangle
        inside = (np.abs(dy) <= half_h) & (
            np.abs(dx) * 2 * half_h <= half_w * (dy + half_h)
        )
    else:  # diamond
        inside = np.abs(dx) * half_h + np.abs(dy) * half_w <= half_w * half_h

    canvas = np.empty((IMG_SIDE, IMG_SIDE, 3), dtype=np.uint8)
    for c in range(3):
        canvas[:, :, c] = np.where(inside, color[c], CLEAN_BG[c])
    return encode_png(canvas)


def mock_remove_bg(png_bytes: bytes) -> bytes:
    """Alpha-key the reserved background color; returns RGBA PNG bytes."""
    rgb = decode_rgb(png_bytes).astype(np.int64)
    is_bg = np.all(rgb == np.asarray(CLEAN_BG, dtype=np.int64), axis=2)
    rgba = np.empty((*rgb.shape[:2], 4), dtype=np.uint8)
    rgba[:, :, :3] = rgb
    rgba[:, :, 3] = np.where(is_bg, 0, 255)
    return encode_png(rgba)


def mock_relight(png_rgba: bytes, prompt: str, seed: int) -> bytes:
    """Compose the foreground over a seeded gradient background (RGB PNG)."""
    rgba = decode_rgba(png_rgba).astype(np.int64)
    height, width = rgba.shape[:2]
    rng = SplitMix64(fnv1a64(prompt) ^ (seed & MASK64) ^ _RELIGHT_SALT)
    c0 = [20 + rng.randbelow(200) for _ in range(3)]
    c1 = [20 + rng.randbelow(200) for _ in range(3)]
    direction = rng.randbelow(4)
    tint = [60 + rng.randbelow(81) for _ in range(3)]

    ys, xs = np.mgrid[0:height, 0:width]
    xs = xs.astype(np.int64)
    ys = ys.astype(np.int64)
    if direction == 0:
        u, extent = xs, width - 1
    elif direction == 1:
        u, extent = ys, height - 1
    elif direction == 2:
        u, extent = xs + ys, width + height - 2
    else:
        u, extent = (width - 1 - xs) + ys, width + height - 2
    if extent <= 0:
        u, extent = np.zeros_like(xs), 1

    out = np.empty((height, width, 3), dtype=np.uint8)
    fg_mask = rgba[:, :, 3] > 127
    for c in range(3):
        grad = (c0[c] * (extent - u) + c1[c] * u + extent // 2) // extent
        grad = np.minimum(255, grad * tint[c] // 100)
        out[:, :, c] = np.where(fg_mask, rgba[:, :, c], grad)
    return encode_png(out)
