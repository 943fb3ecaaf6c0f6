"""Unit-norm descriptors, cosine scoring, and deterministic ranking.

This is the retrieval substrate shared by evaluation, training, and overlap
mining. Descriptors are plain float arrays normalized to unit L2 norm;
a :class:`DescriptorSet` binds a row-major matrix of them to unique image
identifiers. Scores are always accumulated in float64 even when the backing
matrix is stored float32, so rank order is stable across platforms.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    EmptyInputError,
    FormatError,
    LengthMismatchError,
    NonFiniteError,
    ZeroVectorError,
)

ZERO_NORM_THRESHOLD = 1e-12

DESCRIPTOR_MAGIC = b"ILDS"
DESCRIPTOR_VERSION = 1


def normalize(v) -> np.ndarray:
    """Scale ``v`` to unit L2 norm (float64).

    Raises ``NonFiniteError`` on NaN/Inf components and ``ZeroVectorError``
    when the norm falls below 1e-12.
    """
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("normalize expects a non-empty 1-D vector")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError("vector has NaN/Inf components")
    norm = float(np.linalg.norm(arr))
    if norm < ZERO_NORM_THRESHOLD:
        raise ZeroVectorError(f"vector norm {norm!r} below {ZERO_NORM_THRESHOLD}")
    return arr / norm


@dataclass(frozen=True)
class DescriptorSet:
    """Immutable set of unit-norm descriptors bound to unique image ids.

    ``vectors`` is an (n, d) float32 matrix; row i belongs to ``ids[i]``.
    Instances are safe to share across threads.
    """

    ids: tuple[str, ...]
    vectors: np.ndarray

    def __post_init__(self):
        vecs = np.array(self.vectors, dtype=np.float32)
        if vecs.ndim != 2:
            raise ValueError("vectors must be a 2-D (n, d) matrix")
        if vecs.shape[0] != len(self.ids):
            raise LengthMismatchError(
                f"{len(self.ids)} ids vs {vecs.shape[0]} descriptor rows"
            )
        if vecs.shape[0] > 0 and vecs.shape[1] == 0:
            raise ValueError("descriptor dimension must be positive")
        if not np.all(np.isfinite(vecs)):
            raise NonFiniteError("descriptor matrix has NaN/Inf entries")
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("image identifiers must be unique within a set")
        for image_id in self.ids:
            if "\n" in image_id or "\r" in image_id:
                raise ValueError(f"image id {image_id!r} contains a newline")
        vecs.setflags(write=False)
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "vectors", vecs)

    @classmethod
    def from_rows(cls, rows: list[tuple[str, np.ndarray]]) -> "DescriptorSet":
        if not rows:
            raise EmptyInputError("descriptor set needs at least one row")
        ids = tuple(image_id for image_id, _ in rows)
        mat = np.stack([np.asarray(vec, dtype=np.float32) for _, vec in rows])
        return cls(ids, mat)

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def row(self, image_id: str) -> np.ndarray:
        return self.vectors[self.ids.index(image_id)]


def cosine_scores(query: np.ndarray, db: DescriptorSet) -> np.ndarray:
    """Cosine similarity of a unit-norm query against every database row.

    Accumulates in float64 regardless of storage dtype.
    """
    q = np.asarray(query, dtype=np.float64)
    if len(db) == 0:
        raise EmptyInputError("database is empty")
    if q.ndim != 1 or q.shape[0] != db.dim:
        raise DimensionMismatchError(
            f"query dim {q.shape} vs database dim {db.dim}"
        )
    return db.vectors.astype(np.float64) @ q


def rank_descending(scores: np.ndarray, ids: tuple[str, ...] | list[str]) -> list[str]:
    """Sort ids by descending score; ties broken by ascending identifier.

    The tie rule makes rankings reproducible across platforms and BLAS
    builds, which evaluation depends on.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 1 or scores.shape[0] != len(ids):
        raise LengthMismatchError(f"{scores.shape[0]} scores vs {len(ids)} ids")
    order = sorted(range(len(ids)), key=lambda i: (-scores[i], ids[i]))
    return [ids[i] for i in order]


def save_descriptors(path, dset: DescriptorSet) -> None:
    """Write the binary descriptor file.

    Layout: magic ``ILDS``, version u16, n u64, d u32 (all little-endian),
    n*d float32 values row-major, then n newline-terminated UTF-8 ids.
    The encoding round-trips bit-exactly.
    """
    mat = np.ascontiguousarray(dset.vectors, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(DESCRIPTOR_MAGIC)
        fh.write(struct.pack("<HQI", DESCRIPTOR_VERSION, len(dset), dset.dim))
        fh.write(mat.tobytes())
        for image_id in dset.ids:
            fh.write(image_id.encode("utf-8"))
            fh.write(b"\n")


def load_descriptors(path) -> DescriptorSet:
    """Read a descriptor file written by :func:`save_descriptors`."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != DESCRIPTOR_MAGIC:
        raise FormatError("bad magic bytes; not a descriptor file")
    version, n, d = struct.unpack_from("<HQI", data, 4)
    if version != DESCRIPTOR_VERSION:
        raise FormatError(f"unsupported descriptor format version {version}")
    offset = 4 + struct.calcsize("<HQI")
    nbytes = n * d * 4
    if len(data) < offset + nbytes:
        raise FormatError("descriptor file truncated")
    mat = np.frombuffer(data[offset : offset + nbytes], dtype="<f4").reshape(n, d)
    tail = data[offset + nbytes :]
    lines = tail.decode("utf-8").split("\n")
    if lines and lines[-1] == "":
        lines = lines[:-1]
    if len(lines) != n:
        raise FormatError(f"expected {n} ids, found {len(lines)}")
    return DescriptorSet(tuple(lines), mat)
