"""The dataset manifest: classes, image hashes, and per-stage provenance.

Serialized as line-delimited canonical JSON (sorted keys, no whitespace,
ASCII-only): a header line with the embedded config, then one line per
generated class in generation order, then one line per recorded failure.
Only strings and integers appear in records, so the byte stream — and
therefore the manifest fingerprint, the SHA-256 of those bytes — is stable
across platforms.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass

from ..batching import InstanceClass
from ..errors import FormatError

MANIFEST_FORMAT = "ilds-manifest"
MANIFEST_VERSION = 1


@dataclass(frozen=True)
class ImageProvenance:
    """Full stage chain of one training image; every stage is replayable."""

    image_hash: str  # final relit image in the content store
    instance_hash: str  # raw generated object
    foreground_hash: str  # after background removal (RGBA)
    padded_hash: str  # after random padding + resize (RGBA)
    instance_seed: int
    steps: int
    pad_seed: int
    pad_px: int  # total transparent border added per axis, in source pixels
    src_px: int  # source resolution the padding fraction refers to
    bg_seed: int
    client: str

    @property
    def padding_fraction(self) -> float:
        return self.pad_px / self.src_px


@dataclass(frozen=True)
class ManifestClass:
    class_id: str
    domain: str
    category: str
    instance_seed: int
    images: tuple[ImageProvenance, ...]

    def __post_init__(self):
        object.__setattr__(self, "images", tuple(self.images))


@dataclass(frozen=True)
class FailureRecord:
    class_id: str
    stage: str
    reason: str


@dataclass(frozen=True)
class DatasetManifest:
    dataset_id: str
    config_fingerprint: str
    config: dict
    categories: dict  # domain -> list of generated category names
    classes: tuple[ManifestClass, ...]
    failures: tuple[FailureRecord, ...]

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        object.__setattr__(self, "failures", tuple(self.failures))
        n = self.config["domains"][0]["backgrounds_per_instance"]
        hashes = []
        for cls in self.classes:
            if len(cls.images) != n:
                raise FormatError(
                    f"class {cls.class_id!r} has {len(cls.images)} images, expected {n}"
                )
            hashes.extend(img.image_hash for img in cls.images)
        if len(set(hashes)) != len(hashes):
            raise FormatError("duplicate image content hash across classes")

    def instance_classes(self) -> list[InstanceClass]:
        return [
            InstanceClass(
                class_id=cls.class_id,
                image_ids=tuple(img.image_hash for img in cls.images),
            )
            for cls in self.classes
        ]

    def image_count(self) -> int:
        return sum(len(cls.images) for cls in self.classes)

    def serialize(self) -> str:
        lines = [
            _dumps(
                {
                    "format": MANIFEST_FORMAT,
                    "version": MANIFEST_VERSION,
                    "dataset_id": self.dataset_id,
                    "config_fingerprint": self.config_fingerprint,
                    "config": self.config,
                    "categories": self.categories,
                }
            )
        ]
        for cls in self.classes:
            record = asdict(cls)
            record["record"] = "class"
            lines.append(_dumps(record))
        for failure in sorted(self.failures, key=lambda f: f.class_id):
            record = asdict(failure)
            record["record"] = "failure"
            lines.append(_dumps(record))
        return "\n".join(lines) + "\n"

    def fingerprint(self) -> str:
        return hashlib.sha256(self.serialize().encode("utf-8")).hexdigest()


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def save_manifest(path, manifest: DatasetManifest) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(manifest.serialize())


def load_manifest(path) -> DatasetManifest:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line for line in fh.read().split("\n") if line]
    if not lines:
        raise FormatError(f"{path}: empty manifest")
    header = json.loads(lines[0])
    if header.get("format") != MANIFEST_FORMAT:
        raise FormatError(f"{path}: not a manifest file")
    if header.get("version") != MANIFEST_VERSION:
        raise FormatError(f"{path}: unsupported version {header.get('version')!r}")
    classes = []
    failures = []
    for line in lines[1:]:
        record = json.loads(line)
        kind = record.pop("record", None)
        if kind == "class":
            images = tuple(ImageProvenance(**img) for img in record.pop("images"))
            classes.append(ManifestClass(images=images, **record))
        elif kind == "failure":
            failures.append(FailureRecord(**record))
        else:
            raise FormatError(f"{path}: unknown record type {kind!r}")
    return DatasetManifest(
        dataset_id=header["dataset_id"],
        config_fingerprint=header["config_fingerprint"],
        config=header["config"],
        categories=header["categories"],
        classes=tuple(classes),
        failures=tuple(failures),
    )
