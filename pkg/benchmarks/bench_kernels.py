"""Benchmark the numba-compiled hot kernels against the numpy fallbacks.

Times the two kernel families that dominate pipeline runtime: the
Zhang-Shasha forest-distance DP (pairwise tree distance matrices) and the
exact t-SNE inner loops (perplexity binary search, gradient/KL evaluation).
Both variants are imported directly, so the ``MISCOVER_BACKEND`` flag does
not matter here; run with ``python benchmarks/bench_kernels.py``.
"""

from __future__ import annotations

import math
import time

import numpy as np

from miscover.generator import GeneratorSpec, generate
from miscover.tsne import (
    _conditional_probs_loops,
    _conditional_probs_numpy,
    _grad_kl_loops,
    _grad_kl_numpy,
    joint_probabilities,
    squared_distances,
)
from miscover.treedist import _encode, _postorder, _ted_kernel

try:
    from numba import njit

    HAVE_NUMBA = True
    ted_numba = njit(cache=True)(_ted_kernel)
    probs_numba = njit(cache=True)(_conditional_probs_loops)
    grad_numba = njit(cache=True)(_grad_kl_loops)
except ImportError:
    HAVE_NUMBA = False
    print("numba not importable; timing the fallbacks only")


def timeit(fn, *args, repeats=3):
    best = math.inf
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def row(name, fallback_s, numba_s):
    if numba_s is None:
        print(f"{name:<38} {fallback_s * 1e3:10.1f} ms {'-':>12}")
    else:
        speedup = fallback_s / numba_s if numba_s > 0 else math.inf
        print(
            f"{name:<38} {fallback_s * 1e3:10.1f} ms {numba_s * 1e3:9.1f} ms"
            f"   x{speedup:,.1f}"
        )


def bench_ted():
    corpus, _ = generate(
        GeneratorSpec(n_correct=20, n_dup_moves=10, n_fixed_repeat=10,
                      n_local_var=10, seed=0)
    )
    index: dict[str, int] = {}
    encoded = []
    for sub in corpus:
        labels, lml, kr = _postorder(sub.ast)
        encoded.append(
            (
                _encode(labels, index),
                np.asarray(lml, dtype=np.int64),
                np.asarray(kr, dtype=np.int64),
            )
        )

    def all_pairs(kernel):
        total = 0
        for i in range(len(encoded)):
            for j in range(i + 1, len(encoded)):
                total += kernel(*encoded[i], *encoded[j])
        return total

    numba_s = None
    if HAVE_NUMBA:
        all_pairs(ted_numba)  # compile outside the timed region
        numba_s = timeit(all_pairs, ted_numba)
        assert all_pairs(ted_numba) == all_pairs(_ted_kernel)
    fallback_s = timeit(all_pairs, _ted_kernel, repeats=1)
    row(f"tree edit distance ({len(encoded)}x{len(encoded)} matrix)", fallback_s, numba_s)


def bench_tsne(n=200, dim=400):
    rng = np.random.default_rng(1)
    x = rng.normal(size=(n, dim))
    x[n // 2 :, 0] += 30.0
    d2 = squared_distances(x)
    target = math.log(20.0)

    numba_s = None
    if HAVE_NUMBA:
        probs_numba(d2, target)
        numba_s = timeit(probs_numba, d2, target)
        assert np.allclose(probs_numba(d2, target),
                           _conditional_probs_numpy(d2, target), atol=1e-10)
    fallback_s = timeit(_conditional_probs_numpy, d2, target)
    row(f"t-SNE affinity search (N={n})", fallback_s, numba_s)

    p = joint_probabilities(x, 20.0)
    y = rng.normal(size=(n, 2))
    numba_s = None
    if HAVE_NUMBA:
        grad_numba(p, y)
        numba_s = timeit(grad_numba, p, y, repeats=10)
        ga, kla = grad_numba(p, y)
        gb, klb = _grad_kl_numpy(p, y)
        assert np.allclose(ga, gb, atol=1e-10) and abs(kla - klb) < 1e-10
    fallback_s = timeit(_grad_kl_numpy, p, y, repeats=10)
    row(f"t-SNE gradient + KL step (N={n})", fallback_s, numba_s)

    # pure-python loop reference for scale (one repeat; it is slow)
    loops_s = timeit(_grad_kl_loops, p, y, repeats=1) if not HAVE_NUMBA else None
    if loops_s is not None:
        row("  (same loops uncompiled)", loops_s, None)


def main():
    print(f"{'kernel':<38} {'fallback':>12} {'numba':>12}   speedup")
    bench_ted()
    bench_tsne()


if __name__ == "__main__":
    main()
