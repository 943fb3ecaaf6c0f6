"""Canonical PNG encoding for mock-generated images.

Mock clients must produce byte-identical images across independent
implementations (the in-process mocks here and the HTTP sidecar), so the
encoder avoids every degree of freedom a general PNG library would take:

* 8-bit RGB (color type 2) or RGBA (color type 6), no interlace;
* every scanline uses filter type 0 (None);
* the IDAT stream is a zlib wrapper written by hand: header ``78 01``,
  deflate *stored* (uncompressed) blocks of at most 65535 bytes, then the
  Adler-32 checksum.

Decoding of arbitrary PNGs is delegated to Pillow elsewhere; this module
only writes.
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"
_MAX_STORED = 65535


def _chunk(kind: bytes, payload: bytes) -> bytes:
    crc = zlib.crc32(kind + payload) & 0xFFFFFFFF
    return struct.pack(">I", len(payload)) + kind + payload + struct.pack(">I", crc)


def _stored_zlib(data: bytes) -> bytes:
    out = bytearray(b"\x78\x01")
    if not data:
        out += b"\x01\x00\x00\xff\xff"
    else:
        for start in range(0, len(data), _MAX_STORED):
            block = data[start : start + _MAX_STORED]
            final = start + _MAX_STORED >= len(data)
            out.append(0x01 if final else 0x00)
            out += struct.pack("<H", len(block))
            out += struct.pack("<H", len(block) ^ 0xFFFF)
            out += block
    out += struct.pack(">I", zlib.adler32(data) & 0xFFFFFFFF)
    return bytes(out)


def encode_png(pixels: np.ndarray) -> bytes:
    """Encode a uint8 (H, W, 3|4) array as a canonical PNG."""
    arr = np.asarray(pixels, dtype=np.uint8)
    if arr.ndim != 3 or arr.shape[2] not in (3, 4):
        raise ValueError("expected an (H, W, 3) or (H, W, 4) uint8 array")
    height, width, channels = arr.shape
    color_type = 2 if channels == 3 else 6

    ihdr = struct.pack(">IIBBBBB", width, height, 8, color_type, 0, 0, 0)
    raw = bytearray()
    for row in range(height):
        raw.append(0)  # filter type None
        raw += arr[row].tobytes()
    return (
        PNG_SIGNATURE
        + _chunk(b"IHDR", ihdr)
        + _chunk(b"IDAT", _stored_zlib(bytes(raw)))
        + _chunk(b"IEND", b"")
    )
