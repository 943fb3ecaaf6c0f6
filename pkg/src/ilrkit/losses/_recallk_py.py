"""NumPy backend for the smooth recall@k loss kernel.

Kept in lockstep with the compiled Cython backend; both are exercised by
the same correctness tests and may differ only by float summation order.
"""

from __future__ import annotations

import numpy as np

from .common import sigmoid


def recallk_value_grad(scores, labels, ks, temp_rank, temp_outer):
    """Value and score-gradient of the sigmoid-relaxed recall@k loss.

    For each positive p, a smooth rank over all other database items:
        rank(p) = 1 + sum_j sigmoid((s_j - s_p) / temp_rank)
    and a smooth top-k membership sigmoid((k - rank(p)) / temp_outer);
    per-k recall normalizes the membership sum by min(|P|, k). The loss is
    the mean over ks of (1 - recall@k).
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    pos = np.flatnonzero(y == 1)
    n_pos = pos.size

    diffs = (s[None, :] - s[pos, None]) / temp_rank
    sig = sigmoid(diffs)
    rows = np.arange(n_pos)
    sig[rows, pos] = 0.0
    dsig = sig * (1.0 - sig)
    dsig[rows, pos] = 0.0
    ranks = 1.0 + sig.sum(axis=1)

    value = 0.0
    coeff = np.zeros(n_pos)
    for k in ks:
        c_k = min(n_pos, k)
        member = sigmoid((k - ranks) / temp_outer)
        value += 1.0 - member.sum() / c_k
        coeff += member * (1.0 - member) / (c_k * temp_outer)
    value /= len(ks)
    coeff /= len(ks)

    contrib = coeff[:, None] * dsig / temp_rank
    grad = contrib.sum(axis=0)
    grad[pos] -= contrib.sum(axis=1)
    return float(value), grad
