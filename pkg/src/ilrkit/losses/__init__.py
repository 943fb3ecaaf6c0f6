"""The four training objectives, each returning value plus analytic gradient.

* :func:`recall_at_k_loss` — sigmoid-relaxed recall at several cutoffs
  (the default head). A compiled kernel is used when the extension built;
  set ``ILRKIT_PURE_PYTHON=1`` to force the NumPy fallback.
* :func:`info_nce_loss` — softmax cross-entropy over the score vector.
* :func:`contrastive_loss` — squared-distance margin loss with
  hardest-negative mining.
* :func:`softmax_margin_loss` — scaled-cosine classification head.

All are pure functions, safe to evaluate concurrently.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from ..errors import (
    EmptyNegativesError,
    IndexOutOfRangeError,
    NonFiniteError,
)
from . import _recallk_py
from .common import (
    ClassifierLossReport,
    LossReport,
    PairLossReport,
    check_scores_labels,
    require_negative,
    sigmoid,
)

try:
    from . import _recallk_cy
except ImportError:
    _recallk_cy = None

HAVE_COMPILED_KERNEL = _recallk_cy is not None

__all__ = [
    "RecallKConfig",
    "LossReport",
    "PairLossReport",
    "ClassifierLossReport",
    "HAVE_COMPILED_KERNEL",
    "active_backend_name",
    "smooth_rank",
    "recall_at_k_loss",
    "info_nce_loss",
    "contrastive_loss",
    "softmax_margin_loss",
    "sigmoid",
]


def _active_backend():
    if _recallk_cy is not None and os.environ.get("ILRKIT_PURE_PYTHON") != "1":
        return _recallk_cy
    return _recallk_py


def active_backend_name() -> str:
    """Name of the recall@k kernel in use: ``compiled`` or ``numpy``."""
    return "compiled" if _active_backend() is _recallk_cy else "numpy"


@dataclass(frozen=True)
class RecallKConfig:
    """Hyperparameters of the recall@k head.

    ``temp_rank`` relaxes the rank estimation, ``temp_outer`` the top-k
    membership test.
    """

    ks: tuple[int, ...] = (1, 2, 4, 8)
    temp_rank: float = 0.01
    temp_outer: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "ks", tuple(self.ks))
        if not self.ks or any(k < 1 for k in self.ks):
            raise ValueError("ks must be a non-empty list of integers >= 1")
        if list(self.ks) != sorted(self.ks):
            raise ValueError("ks must be sorted ascending")
        if self.temp_rank <= 0 or self.temp_outer <= 0:
            raise ValueError("temperatures must be positive")


def smooth_rank(pos_score: float, other_scores, temp: float) -> float:
    """Sigmoid-relaxed 1-based rank of ``pos_score`` among the others.

    rank = 1 + sum_j sigmoid((other_j - pos_score) / temp); converges to
    the exact rank as temp -> 0 under strict ordering.
    """
    if temp <= 0:
        raise ValueError("temp must be positive")
    others = np.asarray(other_scores, dtype=np.float64)
    if not (np.isfinite(pos_score) and np.all(np.isfinite(others))):
        raise NonFiniteError("scores contain NaN/Inf")
    return 1.0 + float(sigmoid((others - pos_score) / temp).sum())


def recall_at_k_loss(
    scores, labels, config: RecallKConfig = RecallKConfig()
) -> LossReport:
    """Mean over ks of (1 - smooth recall@k), with analytic score gradient."""
    s, y = check_scores_labels(scores, labels)
    require_negative(y)
    backend = _active_backend()
    value, grad = backend.recallk_value_grad(
        s, y, np.asarray(config.ks, dtype=np.int64), config.temp_rank, config.temp_outer
    )
    return LossReport(value=float(value), grad=grad)


def info_nce_loss(scores, labels, temperature: float = 0.05) -> LossReport:
    """Mean over positives of softmax cross-entropy at temperature tau.

    value = -(1/|P|) sum_p log( exp(s_p/tau) / sum_j exp(s_j/tau) ),
    computed via a max-shifted log-sum-exp so it is invariant to adding a
    constant to all scores.
    """
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    s, y = check_scores_labels(scores, labels)
    z = s / temperature
    zmax = z.max()
    shifted = np.exp(z - zmax)
    lse = zmax + math.log(shifted.sum())
    pos = np.flatnonzero(y == 1)
    value = float(lse - z[pos].mean())
    softmax = shifted / shifted.sum()
    grad = (softmax - y / pos.size) / temperature
    return LossReport(value=value, grad=grad)


def contrastive_loss(
    anchor, positive, candidate_negatives, margin: float = 1.0
) -> PairLossReport:
    """Squared-distance contrastive loss with hardest-negative mining.

    The hardest negative is the candidate with the highest cosine
    similarity to the anchor (first index on ties). With D the Euclidean
    distance, value = D(a, p)^2 + max(0, margin - D(a, n*))^2.
    """
    a = np.asarray(anchor, dtype=np.float64)
    p = np.asarray(positive, dtype=np.float64)
    negs = np.asarray(candidate_negatives, dtype=np.float64)
    if negs.ndim == 1:
        negs = negs[None, :]
    if negs.shape[0] == 0:
        raise EmptyNegativesError("need at least one candidate negative")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(p)) and np.all(np.isfinite(negs))):
        raise NonFiniteError("descriptors contain NaN/Inf")

    hardest = int(np.argmax(negs @ a))
    n = negs[hardest]

    d_ap = a - p
    value = float(d_ap @ d_ap)
    grad_a = 2.0 * d_ap
    grad_p = -2.0 * d_ap
    grad_negs = np.zeros_like(negs)

    d_an = a - n
    dist_an = math.sqrt(float(d_an @ d_an))
    hinge = margin - dist_an
    if hinge > 0.0 and dist_an > 1e-12:
        value += hinge * hinge
        direction = d_an / dist_an
        grad_a -= 2.0 * hinge * direction
        grad_negs[hardest] = 2.0 * hinge * direction
    elif hinge > 0.0:
        # anchor and hardest negative coincide: flat subgradient
        value += hinge * hinge

    return PairLossReport(
        value=value,
        grad_anchor=grad_a,
        grad_positive=grad_p,
        grad_negatives=grad_negs,
        hardest_index=hardest,
    )


def softmax_margin_loss(
    embedding,
    class_index: int,
    classifier_weights,
    scale: float = 16.0,
    margin: float = 0.0,
) -> ClassifierLossReport:
    """Scaled-cosine softmax classification loss.

    logits_c = scale * (cos_c - margin * [c == class_index]) with
    cos_c = <W_c, embedding>; value is the cross-entropy at the target
    class, computed max-shifted for stability.
    """
    e = np.asarray(embedding, dtype=np.float64)
    weights = np.asarray(classifier_weights, dtype=np.float64)
    if weights.ndim != 2 or weights.shape[1] != e.shape[0]:
        raise ValueError("classifier weights must be (classes, dim)")
    n_classes = weights.shape[0]
    if not 0 <= class_index < n_classes:
        raise IndexOutOfRangeError(
            f"class index {class_index} outside [0, {n_classes})"
        )
    logits = scale * (weights @ e)
    logits[class_index] -= scale * margin
    zmax = logits.max()
    shifted = np.exp(logits - zmax)
    lse = zmax + math.log(shifted.sum())
    value = float(lse - logits[class_index])
    softmax = shifted / shifted.sum()
    delta = softmax.copy()
    delta[class_index] -= 1.0
    grad_e = scale * (delta @ weights)
    grad_w = scale * np.outer(delta, e)
    return ClassifierLossReport(
        value=value, grad_embedding=grad_e, grad_weights=grad_w
    )
