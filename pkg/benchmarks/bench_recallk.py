"""Benchmark: compiled recall@k kernel vs the NumPy fallback.

Times the loss+gradient evaluation on batch shapes matching training
(database of N*B-1 scores, N-1 positives), across a range of batch sizes.

    python3 benchmarks/bench_recallk.py
"""

import time

import numpy as np

from ilrkit.losses import HAVE_COMPILED_KERNEL, RecallKConfig, _recallk_py

try:
    from ilrkit.losses import _recallk_cy
except ImportError:
    _recallk_cy = None


def bench(backend, scores, labels, ks, config, repeats):
    t0 = time.perf_counter()
    for _ in range(repeats):
        backend.recallk_value_grad(scores, labels, ks, config.temp_rank, config.temp_outer)
    return (time.perf_counter() - t0) / repeats


def main() -> None:
    config = RecallKConfig()
    ks = np.asarray(config.ks, dtype=np.int64)
    rng = np.random.default_rng(0)

    print(f"compiled kernel available: {HAVE_COMPILED_KERNEL}")
    print(f"{'batch (B x N)':>14} {'db size':>8} {'numpy':>12} {'compiled':>12} {'speedup':>8}")
    for classes_per_batch, images_per_class in [(10, 4), (50, 4), (100, 4), (400, 4)]:
        n = classes_per_batch * images_per_class - 1
        scores = rng.uniform(-1, 1, size=n)
        labels = np.zeros(n, dtype=np.int64)
        labels[rng.choice(n, size=images_per_class - 1, replace=False)] = 1
        repeats = max(3, 2000 // classes_per_batch)

        t_numpy = bench(_recallk_py, scores, labels, ks, config, repeats)
        if _recallk_cy is not None:
            t_cy = bench(_recallk_cy, scores, labels, ks, config, repeats)
            v1, g1 = _recallk_py.recallk_value_grad(
                scores, labels, ks, config.temp_rank, config.temp_outer
            )
            v2, g2 = _recallk_cy.recallk_value_grad(
                scores, labels, ks, config.temp_rank, config.temp_outer
            )
            assert abs(v1 - v2) <= 1e-12 and np.abs(g1 - g2).max() <= 1e-12
            speedup = t_numpy / t_cy
            print(
                f"{classes_per_batch:>10} x {images_per_class} {n:>8} "
                f"{t_numpy * 1e6:>10.1f}us {t_cy * 1e6:>10.1f}us {speedup:>7.2f}x"
            )
        else:
            print(
                f"{classes_per_batch:>10} x {images_per_class} {n:>8} "
                f"{t_numpy * 1e6:>10.1f}us {'-':>12} {'-':>8}"
            )


if __name__ == "__main__":
    main()
