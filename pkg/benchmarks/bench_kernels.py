"""Benchmark: compiled trigram kernel vs the pure-Python fallback.

The pairwise similarity kernel dominates dataset builds (every key
operation compares all NLD x documentation schema surfaces), so the
package ships a Cython extension with a pure fallback selected at import.
This script measures both backends on a synthetic schema-surface workload
and verifies they agree bit-for-bit.

Usage: python benchmarks/bench_kernels.py [n_pairs]
"""

import random
import sys
import time

from clarforge.kernels import pure

try:
    from clarforge.kernels import _trigram as compiled
except ImportError:
    compiled = None

WORDS = (
    "fit predict model regression grid search estimator parameter values "
    "fill missing dataset frame plot scatter log scale persist object file "
    "split train test accuracy score matrix confusion random forest"
).split()


def workload(n_pairs: int, seed: int = 13) -> list[tuple[str, str]]:
    rng = random.Random(seed)
    pairs = []
    for _ in range(n_pairs):
        a = " ".join(rng.choices(WORDS, k=rng.randint(1, 4)))
        b = " ".join(rng.choices(WORDS, k=rng.randint(1, 4)))
        pairs.append((a, b))
    return pairs


def bench(impl, pairs):
    started = time.perf_counter()
    scores = [impl.similarity(a, b) for a, b in pairs]
    return time.perf_counter() - started, scores


def bench_matrix(impl, texts):
    started = time.perf_counter()
    matrix = impl.pair_scores(texts, texts)
    return time.perf_counter() - started, matrix


def main() -> int:
    n_pairs = int(sys.argv[1]) if len(sys.argv) > 1 else 20000
    pairs = workload(n_pairs)
    texts = sorted({a for a, _ in pairs})[:200]

    pure_time, pure_scores = bench(pure, pairs)
    pure_mat_time, pure_matrix = bench_matrix(pure, texts)
    print(f"pure     similarity x{n_pairs}: {pure_time:.3f}s "
          f"({n_pairs / pure_time:,.0f} pairs/s)")
    print(f"pure     pair_scores {len(texts)}x{len(texts)}: {pure_mat_time:.3f}s")

    if compiled is None:
        print("compiled kernel not built; nothing to compare")
        return 0

    comp_time, comp_scores = bench(compiled, pairs)
    comp_mat_time, comp_matrix = bench_matrix(compiled, texts)
    print(f"compiled similarity x{n_pairs}: {comp_time:.3f}s "
          f"({n_pairs / comp_time:,.0f} pairs/s)")
    print(f"compiled pair_scores {len(texts)}x{len(texts)}: {comp_mat_time:.3f}s")
    print(f"speedup: {pure_time / comp_time:.1f}x (similarity), "
          f"{pure_mat_time / comp_mat_time:.1f}x (pair matrix)")

    assert comp_scores == pure_scores, "backends disagree on the similarity workload"
    assert comp_matrix == pure_matrix, "backends disagree on the pair matrix"
    print("bit-identical results confirmed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
