"""Deterministic epoch and batch planning for query-vs-database training.

An epoch shuffles the instance classes with a seeded generator and cuts
them into consecutive batches of B classes. Within a batch, one image per
class is designated the query; the remaining N*B' - 1 images form that
query's database, labeled positive where the class matches.

Everything is a pure function of (classes, B, seed), so plans replay
identically on any platform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TooFewClassesError
from .rng import SplitMix64, derive_seed


@dataclass(frozen=True)
class InstanceClass:
    """One instance-level class: N images of the same generated object."""

    class_id: str
    image_ids: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "image_ids", tuple(self.image_ids))
        if len(set(self.image_ids)) != len(self.image_ids):
            raise ValueError(f"class {self.class_id!r} repeats an image id")
        if not self.image_ids:
            raise ValueError(f"class {self.class_id!r} has no images")


@dataclass(frozen=True)
class BatchEntry:
    class_id: str
    image_ids: tuple[str, ...]
    query_index: int


@dataclass(frozen=True)
class BatchPlan:
    """B class entries, each with a designated query image."""

    batch_index: int
    entries: tuple[BatchEntry, ...]
    rng_seed: int

    @property
    def image_count(self) -> int:
        return sum(len(entry.image_ids) for entry in self.entries)


@dataclass(frozen=True)
class RetrievalTask:
    """One query against the rest of its batch."""

    class_id: str
    query_id: str
    database_ids: tuple[str, ...]
    labels: np.ndarray  # uint8, aligned with database_ids


def build_epoch(
    classes: list[InstanceClass], classes_per_batch: int, rng_seed: int
) -> list[BatchPlan]:
    """Shuffle classes and partition into batches of ``classes_per_batch``.

    A short final batch is kept when at least two classes remain; a single
    leftover class is dropped (a ranking task needs a negative class).
    Query indices are drawn here from a per-batch derived stream, so the
    plan is complete and immutable once returned.
    """
    if classes_per_batch < 2:
        raise ValueError("classes_per_batch must be >= 2")
    if len(classes) < 2:
        raise TooFewClassesError(f"need >= 2 classes, got {len(classes)}")
    sizes = {len(c.image_ids) for c in classes}
    if len(sizes) != 1:
        raise ValueError(f"classes disagree on images per class: {sorted(sizes)}")
    if len({c.class_id for c in classes}) != len(classes):
        raise ValueError("duplicate class ids")

    order = list(classes)
    SplitMix64(derive_seed(rng_seed, "epoch-shuffle")).shuffle(order)

    plans = []
    for start in range(0, len(order), classes_per_batch):
        chunk = order[start : start + classes_per_batch]
        if len(chunk) < 2:
            break
        batch_index = start // classes_per_batch
        batch_seed = derive_seed(rng_seed, "batch", batch_index)
        rng = SplitMix64(batch_seed)
        entries = tuple(
            BatchEntry(
                class_id=c.class_id,
                image_ids=c.image_ids,
                query_index=rng.randbelow(len(c.image_ids)),
            )
            for c in chunk
        )
        plans.append(BatchPlan(batch_index=batch_index, entries=entries, rng_seed=batch_seed))
    return plans


def batch_to_tasks(plan: BatchPlan) -> list[RetrievalTask]:
    """Materialize one retrieval task per class of the batch.

    Each task's database is every non-query image of the batch, in batch
    order; labels mark same-class images positive (N-1 per task).
    """
    tasks = []
    for entry in plan.entries:
        query_id = entry.image_ids[entry.query_index]
        database: list[str] = []
        labels: list[int] = []
        for other in plan.entries:
            for image_id in other.image_ids:
                if image_id == query_id:
                    continue
                database.append(image_id)
                labels.append(1 if other.class_id == entry.class_id else 0)
        tasks.append(
            RetrievalTask(
                class_id=entry.class_id,
                query_id=query_id,
                database_ids=tuple(database),
                labels=np.asarray(labels, dtype=np.uint8),
            )
        )
    return tasks


def dump_batch_plans(path, plans: list[BatchPlan]) -> None:
    """Debug dump, one batch per line:
    ``batch_idx<TAB>class_id:query_image/img1,img2,...`` per class."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for plan in plans:
            fields = [str(plan.batch_index)]
            for entry in plan.entries:
                query = entry.image_ids[entry.query_index]
                fields.append(f"{entry.class_id}:{query}/{','.join(entry.image_ids)}")
            fh.write("\t".join(fields) + "\n")
