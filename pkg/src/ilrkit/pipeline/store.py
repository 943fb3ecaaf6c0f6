"""Content-addressed image store: files named by SHA-256 of their bytes.

Writes go to a temp file first and are renamed into place, so concurrent
writers (the stage worker pool) can never leave a torn file, and re-writing
identical content is a no-op.
"""

from __future__ import annotations

import hashlib
import os
import tempfile
from pathlib import Path

from ..errors import MissingImageError


def content_hash(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class ContentStore:
    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def path(self, digest: str) -> Path:
        return self.root / f"{digest}.png"

    def has(self, digest: str) -> bool:
        return self.path(digest).is_file()

    def put(self, data: bytes) -> str:
        digest = content_hash(data)
        target = self.path(digest)
        if target.is_file():
            return digest
        fd, tmp = tempfile.mkstemp(dir=self.root, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            os.replace(tmp, target)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        return digest

    def load(self, digest: str) -> bytes:
        target = self.path(digest)
        if not target.is_file():
            raise MissingImageError(f"no stored image with hash {digest}")
        return target.read_bytes()
