"""Train/test contamination mining.

Retrieves every evaluation query against the generated training set and
surfaces the globally most similar pairs for visual inspection. Similarity
goes through the same scoring path as evaluation, so reported values can
never drift from what the retriever would see.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

from .descriptors import DescriptorSet, cosine_scores
from .errors import DimensionMismatchError, EmptyInputError


@dataclass(frozen=True)
class OverlapPair:
    query_id: str
    train_image_id: str
    similarity: float
    rank: int  # 1-based rank of the training image for this query


def mine_overlap(
    test_queries: DescriptorSet,
    train_set: DescriptorSet,
    top_m: int,
    per_query: int = 1,
) -> list[OverlapPair]:
    """Top ``per_query`` training matches per query, globally top-``top_m``.

    The global list is ordered by descending similarity with (query id,
    train id) as the deterministic tie-break.
    """
    if top_m < 1 or per_query < 1:
        raise ValueError("top_m and per_query must be >= 1")
    if len(test_queries) == 0 or len(train_set) == 0:
        raise EmptyInputError("need non-empty query and training sets")
    if test_queries.dim != train_set.dim:
        raise DimensionMismatchError(
            f"query dim {test_queries.dim} vs training dim {train_set.dim}"
        )
    pairs = []
    for i, query_id in enumerate(test_queries.ids):
        scores = cosine_scores(test_queries.vectors[i], train_set)
        order = sorted(
            range(len(train_set)), key=lambda j: (-scores[j], train_set.ids[j])
        )
        for rank, j in enumerate(order[:per_query], start=1):
            pairs.append(
                OverlapPair(
                    query_id=query_id,
                    train_image_id=train_set.ids[j],
                    similarity=float(scores[j]),
                    rank=rank,
                )
            )
    pairs.sort(key=lambda p: (-p.similarity, p.query_id, p.train_image_id))
    return pairs[:top_m]


def save_overlap_csv(path, pairs: list[OverlapPair]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["query_id", "train_image_id", "similarity", "rank"])
        for pair in pairs:
            writer.writerow(
                [pair.query_id, pair.train_image_id, repr(pair.similarity), pair.rank]
            )


def save_contact_sheet(path, pairs: list[OverlapPair], resolve=None) -> None:
    """Write the image-pair directive file: one ``query<TAB>train`` line per
    pair, optionally resolving ids to file paths. Rendering is external."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for pair in pairs:
            left = pair.query_id
            right = str(resolve(pair.train_image_id)) if resolve else pair.train_image_id
            fh.write(f"{left}\t{right}\n")
