#!/usr/bin/env python3
"""Compare the compiled LCS kernel against the pure-Python fallback, both on
the raw kernel and end-to-end through the greedy extractive oracle (whose
inner loop is ROUGE-L's LCS)."""

import random
import statistics
import sys
import time

sys.path.insert(0, "src")

from mira import _lcs, kernels
from mira.lexical import SourceConfig, ext_oracle

sys.path.insert(0, "tests")
from conftest import synth_corpus  # noqa: E402


def time_it(fn, repeats=5):
    samples = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - start)
    return min(samples), statistics.median(samples)


def bench_kernel():
    rng = random.Random(7)
    cases = {
        "summary-vs-sentence (35x30)": (35, 30),
        "summary-vs-selection (35x100)": (35, 100),
        "summary-vs-document (35x700)": (35, 700),
    }
    print(f"{'case':<32} {'python':>10} {'cython':>10} {'speedup':>8}")
    for name, (na, nb) in cases.items():
        a = [rng.randrange(50) for _ in range(na)]
        b = [rng.randrange(50) for _ in range(nb)]

        def py():
            for _ in range(200):
                _lcs.lcs_length(a, b)

        def cy():
            for _ in range(200):
                kernels.lcs_length(a, b)

        t_py, _ = time_it(py)
        t_cy, _ = time_it(cy)
        print(f"{name:<32} {t_py * 5:>9.2f}ms {t_cy * 5:>9.2f}ms {t_py / t_cy:>7.1f}x")


def bench_oracle():
    examples = synth_corpus(seed=99, n=40)

    def run():
        for ex in examples:
            ext_oracle(ex, SourceConfig.S_DA, k=3)

    real = kernels.lcs_length
    try:
        kernels.lcs_length = _lcs.lcs_length
        t_py, _ = time_it(run, repeats=3)
    finally:
        kernels.lcs_length = real
    t_cy, _ = time_it(run, repeats=3)
    print(f"\n{'greedy oracle, 40 examples':<32} {t_py * 1000:>9.0f}ms "
          f"{t_cy * 1000:>9.0f}ms {t_py / t_cy:>7.1f}x")


if __name__ == "__main__":
    print(f"active backend: {kernels.BACKEND}\n")
    if kernels.BACKEND != "cython":
        print("compiled extension not built; benchmarking fallback against itself")
    bench_kernel()
    bench_oracle()
