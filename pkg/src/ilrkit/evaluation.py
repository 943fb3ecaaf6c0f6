"""Retrieval evaluation: AP/mAP with junk handling and per-query reports.

Junk images are removed from the ranking before scoring (the landmark
benchmark convention): they are neither rewarded nor penalized, and every
item below a junk entry shifts one rank up. AP with a cutoff normalizes by
``min(|positives|, cutoff)``.

Per-query AP sums are accumulated sequentially in float64, term by term in
rank order, so results are bit-identical to a straight-line oracle doing
the same arithmetic.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

from .descriptors import DescriptorSet, cosine_scores, rank_descending
from .errors import (
    DimensionMismatchError,
    EmptyInputError,
    JudgmentError,
    QuerySetMismatchError,
    UnknownIdError,
)


@dataclass(frozen=True)
class RelevanceJudgment:
    """Ground truth for one query: positive ids, junk ids, rest negative."""

    query_id: str
    positive_ids: frozenset[str]
    junk_ids: frozenset[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "positive_ids", frozenset(self.positive_ids))
        object.__setattr__(self, "junk_ids", frozenset(self.junk_ids))
        if not self.positive_ids:
            raise JudgmentError(f"query {self.query_id!r} has no positives")
        if self.positive_ids & self.junk_ids:
            raise JudgmentError(
                f"query {self.query_id!r}: positives and junk overlap"
            )
        if self.query_id in self.positive_ids:
            raise JudgmentError(f"query {self.query_id!r} lists itself as positive")


@dataclass(frozen=True)
class MetricConfig:
    """Evaluation settings: optional rank cutoff and recall@k diagnostics."""

    cutoff: int | None = None
    recall_ks: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.cutoff is not None and self.cutoff < 1:
            raise ValueError("cutoff must be >= 1 when present")
        if self.recall_ks is not None:
            object.__setattr__(self, "recall_ks", tuple(self.recall_ks))
            if any(k < 1 for k in self.recall_ks):
                raise ValueError("recall ks must be >= 1")

    @property
    def map_name(self) -> str:
        return "map" if self.cutoff is None else f"map@{self.cutoff}"


@dataclass
class PerQueryReport:
    """AP per query for one (dataset, model) pair; insertion-ordered."""

    dataset_tag: str = ""
    model_tag: str = ""
    aps: dict[str, float] = field(default_factory=dict)

    def add(self, query_id: str, ap: float) -> None:
        if query_id in self.aps:
            raise ValueError(f"duplicate query {query_id!r} in report")
        self.aps[query_id] = ap


@dataclass(frozen=True)
class EvalSummary:
    """Named metric values for one dataset."""

    dataset_tag: str
    metrics: dict[str, float]


def _post_junk_ranking(ranked: list[str], judgment: RelevanceJudgment) -> list[str]:
    known = set(ranked)
    missing = (judgment.positive_ids | judgment.junk_ids) - known
    if missing:
        raise UnknownIdError(
            f"query {judgment.query_id!r}: ids not in database: {sorted(missing)[:5]}"
        )
    junk = judgment.junk_ids
    return [image_id for image_id in ranked if image_id not in junk]


def average_precision(
    ranked: list[str],
    judgment: RelevanceJudgment,
    config: MetricConfig = MetricConfig(),
) -> float:
    """AP of one ranked list after junk removal, optionally cutoff-limited.

    AP = sum of precision@i over positive-holding ranks i <= cutoff,
    divided by min(|positives|, cutoff).
    """
    kept = _post_junk_ranking(ranked, judgment)
    positives = judgment.positive_ids
    cutoff = len(kept) if config.cutoff is None else min(config.cutoff, len(kept))
    hits = 0
    total = 0.0
    for idx in range(cutoff):
        if kept[idx] in positives:
            hits += 1
            total += hits / (idx + 1)
    denom = min(len(positives), config.cutoff) if config.cutoff else len(positives)
    return total / denom


def recall_at_k_metric(
    ranked: list[str], judgment: RelevanceJudgment, k: int
) -> float:
    """Fraction of findable positives inside the top-k post-junk ranks."""
    if k < 1:
        raise ValueError("k must be >= 1")
    kept = _post_junk_ranking(ranked, judgment)
    found = sum(1 for image_id in kept[:k] if image_id in judgment.positive_ids)
    return found / min(len(judgment.positive_ids), k)


def mean_average_precision(aps: list[float]) -> float:
    """Arithmetic mean of per-query AP values (sequential accumulation)."""
    if len(aps) == 0:
        raise EmptyInputError("mean over zero queries")
    total = 0.0
    for ap in aps:
        total += ap
    return total / len(aps)


def evaluate_dataset(
    queries: DescriptorSet,
    database: DescriptorSet,
    judgments: dict[str, RelevanceJudgment],
    config: MetricConfig = MetricConfig(),
    dataset_tag: str = "",
    model_tag: str = "",
) -> tuple[PerQueryReport, EvalSummary]:
    """Rank the database for every query and aggregate AP (+ recall@k).

    Every query needs a judgment, and the query id must not itself appear
    in the database: a query retrieving itself would trivially inflate AP.
    """
    if queries.dim != database.dim:
        raise DimensionMismatchError(
            f"query dim {queries.dim} vs database dim {database.dim}"
        )
    db_ids = set(database.ids)
    report = PerQueryReport(dataset_tag=dataset_tag, model_tag=model_tag)
    recall_totals = {k: 0.0 for k in (config.recall_ks or ())}
    for i, query_id in enumerate(queries.ids):
        judgment = judgments.get(query_id)
        if judgment is None:
            raise JudgmentError(f"no judgment for query {query_id!r}")
        if query_id in db_ids:
            raise JudgmentError(
                f"query {query_id!r} present in database; exclude self-matches"
            )
        scores = cosine_scores(queries.vectors[i], database)
        ranked = rank_descending(scores, database.ids)
        report.add(query_id, average_precision(ranked, judgment, config))
        for k in recall_totals:
            recall_totals[k] += recall_at_k_metric(ranked, judgment, k)
    metrics = {config.map_name: mean_average_precision(list(report.aps.values()))}
    for k, total in recall_totals.items():
        metrics[f"recall@{k}"] = total / len(queries)
    return report, EvalSummary(dataset_tag=dataset_tag, metrics=metrics)


def evaluate_leave_one_in(
    descriptors: DescriptorSet,
    judgments: dict[str, RelevanceJudgment],
    config: MetricConfig = MetricConfig(),
    dataset_tag: str = "",
    model_tag: str = "",
) -> tuple[PerQueryReport, EvalSummary]:
    """Evaluate queries drawn from the corpus itself.

    Each judged query ranks every *other* image of the corpus, so
    self-matches are excluded explicitly rather than rewarded.
    """
    index_of = {image_id: i for i, image_id in enumerate(descriptors.ids)}
    report = PerQueryReport(dataset_tag=dataset_tag, model_tag=model_tag)
    recall_totals = {k: 0.0 for k in (config.recall_ks or ())}
    for query_id, judgment in judgments.items():
        if query_id not in index_of:
            raise UnknownIdError(f"query {query_id!r} has no descriptor")
        q = index_of[query_id]
        rest_ids = [i for i in descriptors.ids if i != query_id]
        scores = descriptors.vectors.astype("float64") @ descriptors.vectors[q].astype(
            "float64"
        )
        rest_scores = [scores[index_of[i]] for i in rest_ids]
        ranked = rank_descending(rest_scores, rest_ids)
        report.add(query_id, average_precision(ranked, judgment, config))
        for k in recall_totals:
            recall_totals[k] += recall_at_k_metric(ranked, judgment, k)
    metrics = {config.map_name: mean_average_precision(list(report.aps.values()))}
    for k, total in recall_totals.items():
        metrics[f"recall@{k}"] = total / len(report.aps)
    return report, EvalSummary(dataset_tag=dataset_tag, metrics=metrics)


def scatter_pairs(
    report_a: PerQueryReport, report_b: PerQueryReport
) -> list[tuple[str, float, float]]:
    """Pair two reports by query id for AP-vs-AP scatter plotting."""
    if set(report_a.aps) != set(report_b.aps):
        raise QuerySetMismatchError(
            "reports cover different query sets "
            f"({len(report_a.aps)} vs {len(report_b.aps)} queries)"
        )
    return [
        (query_id, report_a.aps[query_id], report_b.aps[query_id])
        for query_id in sorted(report_a.aps)
    ]


# ---------------------------------------------------------------------------
# file formats


def load_relevance_file(path) -> dict[str, RelevanceJudgment]:
    """Parse the line-oriented relevance format.

    One record per line: ``query_id<TAB>pos:id1,id2<TAB>junk:id3`` where the
    junk field may be empty or absent. Queries without positives are
    rejected by the judgment invariant.
    """
    judgments: dict[str, RelevanceJudgment] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) < 2:
                raise JudgmentError(f"{path}:{lineno}: expected tab-separated fields")
            query_id = fields[0]
            positives: list[str] = []
            junk: list[str] = []
            for fld in fields[1:]:
                if fld.startswith("pos:"):
                    positives = [s for s in fld[4:].split(",") if s]
                elif fld.startswith("junk:"):
                    junk = [s for s in fld[5:].split(",") if s]
                else:
                    raise JudgmentError(f"{path}:{lineno}: unknown field {fld!r}")
            if query_id in judgments:
                raise JudgmentError(f"{path}:{lineno}: duplicate query {query_id!r}")
            judgments[query_id] = RelevanceJudgment(
                query_id, frozenset(positives), frozenset(junk)
            )
    if not judgments:
        raise EmptyInputError(f"{path}: no judgments")
    return judgments


def save_relevance_file(path, judgments: dict[str, RelevanceJudgment]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for query_id in judgments:
            j = judgments[query_id]
            pos = ",".join(sorted(j.positive_ids))
            junk = ",".join(sorted(j.junk_ids))
            fh.write(f"{query_id}\tpos:{pos}\tjunk:{junk}\n")


def save_per_query_csv(path, report: PerQueryReport) -> None:
    """CSV with header ``query_id,ap``; values carry full float64 repr."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["query_id", "ap"])
        for query_id, ap in report.aps.items():
            writer.writerow([query_id, repr(ap)])


def load_per_query_csv(path, dataset_tag: str = "", model_tag: str = "") -> PerQueryReport:
    report = PerQueryReport(dataset_tag=dataset_tag, model_tag=model_tag)
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["query_id", "ap"]:
            raise ValueError(f"{path}: expected header query_id,ap")
        for row in reader:
            if len(row) != 2:
                raise ValueError(f"{path}: malformed row {row!r}")
            report.add(row[0], float(row[1]))
    return report


def format_summary(summary: EvalSummary) -> str:
    """Stable text form: one ``dataset<TAB>metric<TAB>value`` line per metric."""
    lines = [
        f"{summary.dataset_tag}\t{name}\t{summary.metrics[name]:.4f}"
        for name in summary.metrics
    ]
    return "\n".join(lines) + "\n"
