"""Four-stage pipeline orchestration: categories, instances, foregrounds,
relit backgrounds.

Every stochastic choice derives from the master seed via a documented
split (stage tag + indices hashed into the seed), so a rerun with the same
config reproduces every request and every content hash. Stage results are
recorded in an append-only journal keyed by the request parameters; a warm
rerun with a populated journal and store performs zero client calls.

Failures are contained per class: a class missing any of its images is
dropped and recorded; the run aborts only when more than 20% of planned
classes fail.
"""

from __future__ import annotations

import hashlib
import json
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import (
    ClientError,
    DecodeError,
    DegenerateMaskError,
    GenerationFailedError,
    TooFewCategoriesError,
)
from ..imaging import decode_rgba, resize_bilinear
from ..rng import SplitMix64, derive_seed
from .config import GenerationConfig
from .manifest import (
    DatasetManifest,
    FailureRecord,
    ImageProvenance,
    ManifestClass,
)
from .pngio import encode_png
from .prompts import category_prompt, render_instance_prompt
from .store import ContentStore

COVERAGE_MIN = 0.01
COVERAGE_MAX = 0.99
CATEGORY_ACCEPT_FRACTION = 0.9
CLASS_FAILURE_ABORT_FRACTION = 0.2


class StageJournal:
    """Append-only (stage key -> result) cache backing resumable reruns."""

    def __init__(self, path):
        self.path = Path(path)
        self._entries: dict[str, dict] = {}
        self._lock = threading.Lock()
        if self.path.is_file():
            with open(self.path, "r", encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        record = json.loads(line)
                        self._entries[record["key"]] = record["result"]

    def get(self, key: str):
        return self._entries.get(key)

    def put(self, key: str, result: dict) -> None:
        line = json.dumps({"key": key, "result": result}, sort_keys=True)
        with self._lock:
            self._entries[key] = result
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")


def stage_key(**fields) -> str:
    blob = json.dumps(fields, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _cached_image(journal: StageJournal, store: ContentStore, key: str, produce):
    cached = journal.get(key)
    if cached is not None and store.has(cached["hash"]):
        return cached["hash"]
    digest = store.put(produce())
    journal.put(key, {"hash": digest})
    return digest


def alpha_coverage(rgba: np.ndarray) -> float:
    """Fraction of pixels whose alpha exceeds one half."""
    return float(np.mean(rgba[:, :, 3] > 127))


def pad_and_resize(rgba: np.ndarray, rng: SplitMix64, max_fraction: float):
    """Add a random transparent border and resize back to the source size.

    One padding fraction p ~ U[0, max_fraction] applies to both axes (the
    object keeps its aspect ratio); the border splits randomly between
    left/right and top/bottom. Returns (padded array, pad_px, src_px) where
    pad_px/src_px is the applied fraction on the vertical axis.
    """
    arr = np.asarray(rgba, dtype=np.uint8)
    height, width = arr.shape[:2]
    fraction = rng.uniform(0.0, max_fraction)
    pad_y = int(round(fraction * height))
    pad_x = int(round(fraction * width))
    left = rng.randbelow(pad_x + 1)
    top = rng.randbelow(pad_y + 1)
    if pad_y == 0 and pad_x == 0:
        return arr.copy(), 0, height
    canvas = np.zeros((height + pad_y, width + pad_x, 4), dtype=np.uint8)
    canvas[top : top + height, left : left + width] = arr
    resized = resize_bilinear(canvas.astype(np.float64), height, width)
    return np.clip(np.rint(resized), 0, 255).astype(np.uint8), pad_y, height


def generate_categories(domain: str, prompt_text: str, count: int, client) -> list[str]:
    """Fetch, trim, deduplicate, and bound the category list for a domain.

    Over-delivery is truncated to ``count``; under-delivery is accepted
    down to 90% of ``count`` and an error below that.
    """
    try:
        raw = client.categories(domain, prompt_text, count)
    except ClientError:
        raise
    except Exception as exc:  # transport-level surprises become stage errors
        raise ClientError("categories", str(exc)) from exc
    seen = set()
    names = []
    for name in raw:
        cleaned = " ".join(str(name).split())
        if cleaned and cleaned not in seen:
            seen.add(cleaned)
            names.append(cleaned)
    if len(names) < CATEGORY_ACCEPT_FRACTION * count:
        raise TooFewCategoriesError(
            f"domain {domain!r}: {len(names)} usable categories of {count} requested"
        )
    return names[:count]


@dataclass
class PipelineResult:
    manifest: DatasetManifest
    manifest_path: Path
    store: ContentStore


def _build_class(task, config: GenerationConfig, clients, store, journal):
    domain, category, k = task
    spec = next(d for d in config.domains if d.name == domain)
    instance_seed = derive_seed(config.master_seed, "instance", domain, category, k)
    class_id = f"{domain}/{category}#{k}"
    prompt = render_instance_prompt(category)
    steps = config.inference_steps

    try:
        instance_hash = _cached_image(
            journal,
            store,
            stage_key(stage="instance", prompt=prompt, seed=instance_seed, steps=steps),
            lambda: clients.instance_source.generate(prompt, instance_seed, steps),
        )
        foreground_hash = _cached_image(
            journal,
            store,
            stage_key(stage="remove_bg", input=instance_hash),
            lambda: clients.background_remover.remove_bg(store.load(instance_hash)),
        )
        rgba = decode_rgba(store.load(foreground_hash))
        coverage = alpha_coverage(rgba)
        if not COVERAGE_MIN <= coverage <= COVERAGE_MAX:
            raise DegenerateMaskError(
                f"alpha coverage {coverage:.4f} outside [{COVERAGE_MIN}, {COVERAGE_MAX}]"
            )

        images = []
        for n in range(spec.backgrounds_per_instance):
            pad_seed = derive_seed(config.master_seed, "pad", domain, category, k, n)
            pad_key = stage_key(
                stage="pad",
                input=foreground_hash,
                seed=pad_seed,
                max_fraction=config.max_padding_fraction,
            )
            cached = journal.get(pad_key)
            if cached is not None and store.has(cached["hash"]):
                padded_hash, pad_px, src_px = cached["hash"], cached["pad_px"], cached["src_px"]
            else:
                padded, pad_px, src_px = pad_and_resize(
                    rgba, SplitMix64(pad_seed), config.max_padding_fraction
                )
                padded_hash = store.put(encode_png(padded))
                journal.put(
                    pad_key, {"hash": padded_hash, "pad_px": pad_px, "src_px": src_px}
                )
            bg_seed = derive_seed(config.master_seed, "relight", domain, category, k, n)
            image_hash = _cached_image(
                journal,
                store,
                stage_key(stage="relight", input=padded_hash, prompt=category, seed=bg_seed),
                lambda: clients.relighter.relight(store.load(padded_hash), category, bg_seed),
            )
            images.append(
                ImageProvenance(
                    image_hash=image_hash,
                    instance_hash=instance_hash,
                    foreground_hash=foreground_hash,
                    padded_hash=padded_hash,
                    instance_seed=instance_seed,
                    steps=steps,
                    pad_seed=pad_seed,
                    pad_px=pad_px,
                    src_px=src_px,
                    bg_seed=bg_seed,
                    client=clients.label,
                )
            )
        return ManifestClass(
            class_id=class_id,
            domain=domain,
            category=category,
            instance_seed=instance_seed,
            images=tuple(images),
        )
    except (ClientError, DegenerateMaskError, DecodeError) as exc:
        stage = exc.stage if isinstance(exc, ClientError) else type(exc).__name__
        return FailureRecord(class_id=class_id, stage=str(stage), reason=str(exc))


def run_pipeline(
    config: GenerationConfig, clients, workdir, threads: int = 4
) -> PipelineResult:
    """Execute all four stages and write a manifest under ``workdir``.

    ``threads`` bounds concurrent in-flight stage requests; 1 forces the
    fully sequential path. Output content is identical either way because
    all work items are deterministic and the manifest preserves plan order.
    """
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    store = ContentStore(workdir / "store")
    journal = StageJournal(workdir / "journal.jsonl")

    categories: dict[str, list[str]] = {}
    for spec in config.domains:
        prompt = category_prompt(spec.name, spec.prompt_kind, spec.categories)
        key = stage_key(
            stage="categories",
            domain=spec.name,
            prompt=prompt.text,
            count=spec.categories,
        )
        cached = journal.get(key)
        if cached is not None:
            names = list(cached["names"])
        else:
            names = generate_categories(
                spec.name, prompt.text, spec.categories, clients.category_source
            )
            journal.put(key, {"names": names})
        categories[spec.name] = names

    tasks = [
        (spec.name, category, k)
        for spec in config.domains
        for category in categories[spec.name]
        for k in range(spec.instances_per_category)
    ]

    if threads <= 1:
        outcomes = [_build_class(t, config, clients, store, journal) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(
                pool.map(lambda t: _build_class(t, config, clients, store, journal), tasks)
            )

    classes = tuple(o for o in outcomes if isinstance(o, ManifestClass))
    failures = tuple(o for o in outcomes if isinstance(o, FailureRecord))
    if tasks and len(failures) > CLASS_FAILURE_ABORT_FRACTION * len(tasks):
        detail = "; ".join(f"{f.class_id}: {f.reason}" for f in failures[:5])
        raise GenerationFailedError(
            f"{len(failures)}/{len(tasks)} classes failed ({detail})"
        )

    manifest = DatasetManifest(
        dataset_id=config.fingerprint()[:12],
        config_fingerprint=config.fingerprint(),
        config=config.to_dict(),
        categories=categories,
        classes=classes,
        failures=failures,
    )
    manifest_path = workdir / "manifest.jsonl"
    from .manifest import save_manifest

    save_manifest(manifest_path, manifest)
    return PipelineResult(manifest=manifest, manifest_path=manifest_path, store=store)
