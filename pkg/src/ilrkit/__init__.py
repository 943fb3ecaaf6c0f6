"""ilrkit: an instance-level retrieval workbench.

Generates labeled instance-level training data through a four-stage
synthetic pipeline, trains a small descriptor encoder with ranking losses
over query-vs-database batches, and evaluates retrieval with AP/mAP,
per-query reports, and train/test overlap mining.
"""

__version__ = "0.1.0"

from .descriptors import (
    DescriptorSet,
    cosine_scores,
    load_descriptors,
    normalize,
    rank_descending,
    save_descriptors,
)
from .evaluation import (
    EvalSummary,
    MetricConfig,
    PerQueryReport,
    RelevanceJudgment,
    average_precision,
    evaluate_dataset,
    evaluate_leave_one_in,
    mean_average_precision,
    recall_at_k_metric,
    scatter_pairs,
)
from .batching import (
    BatchPlan,
    InstanceClass,
    RetrievalTask,
    batch_to_tasks,
    build_epoch,
)
from .overlap import OverlapPair, mine_overlap

__all__ = [
    "DescriptorSet",
    "cosine_scores",
    "load_descriptors",
    "normalize",
    "rank_descending",
    "save_descriptors",
    "EvalSummary",
    "MetricConfig",
    "PerQueryReport",
    "RelevanceJudgment",
    "average_precision",
    "evaluate_dataset",
    "evaluate_leave_one_in",
    "mean_average_precision",
    "recall_at_k_metric",
    "scatter_pairs",
    "BatchPlan",
    "InstanceClass",
    "RetrievalTask",
    "batch_to_tasks",
    "build_epoch",
    "OverlapPair",
    "mine_overlap",
]
