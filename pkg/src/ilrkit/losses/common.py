"""Shared pieces for the loss heads: stable sigmoid, reports, label checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import (
    LengthMismatchError,
    NoNegativeError,
    NonFiniteError,
    NoPositiveError,
)


def sigmoid(x):
    """Numerically stable logistic sigmoid, elementwise."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass(frozen=True)
class LossReport:
    """Loss value plus analytic gradient aligned with the input scores."""

    value: float
    grad: np.ndarray


@dataclass(frozen=True)
class PairLossReport:
    """Contrastive loss value with gradients for the descriptors consumed.

    ``grad_negatives`` matches the candidate matrix shape; only the mined
    hardest row is nonzero.
    """

    value: float
    grad_anchor: np.ndarray
    grad_positive: np.ndarray
    grad_negatives: np.ndarray
    hardest_index: int


@dataclass(frozen=True)
class ClassifierLossReport:
    """Classification loss value with embedding and weight gradients."""

    value: float
    grad_embedding: np.ndarray
    grad_weights: np.ndarray


def check_scores_labels(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    """Validate a (scores, binary labels) pair for the ranking losses."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.ndim != 1 or y.ndim != 1:
        raise ValueError("scores and labels must be 1-D")
    if s.shape[0] != y.shape[0]:
        raise LengthMismatchError(f"{s.shape[0]} scores vs {y.shape[0]} labels")
    if not np.all(np.isfinite(s)):
        raise NonFiniteError("scores contain NaN/Inf")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be binary")
    if not np.any(y == 1):
        raise NoPositiveError("no positive label")
    return s, y.astype(np.int64)


def require_negative(labels: np.ndarray) -> None:
    if not np.any(labels == 0):
        raise NoNegativeError("no negative label")
