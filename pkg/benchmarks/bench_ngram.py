"""Compare the compiled n-gram kernel against the pure-Python fallback.

Usage: python3 benchmarks/bench_ngram.py [--pairs N] [--tokens N] [--repeat N]

Generates a synthetic corpus, times clipped_match_totals under both
kernels, and verifies they agree before reporting throughput.
"""

import argparse
import random
import time

from fablemt.bleu import _ngram_py

try:
    from fablemt.bleu import _ngram
except ImportError:
    _ngram = None


def make_corpus(n_pairs, max_tokens, seed=7):
    rng = random.Random(seed)
    vocab = [f"w{i}" for i in range(200)]
    cands = [rng.choices(vocab, k=rng.randint(5, max_tokens)) for _ in range(n_pairs)]
    refs = [rng.choices(vocab, k=rng.randint(5, max_tokens)) for _ in range(n_pairs)]
    return cands, refs


def time_kernel(kernel, cands, refs, repeat):
    best = float("inf")
    result = None
    for _ in range(repeat):
        start = time.perf_counter()
        result = kernel.clipped_match_totals(cands, refs, 4)
        best = min(best, time.perf_counter() - start)
    return best, result


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--pairs", type=int, default=5000)
    parser.add_argument("--tokens", type=int, default=120)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    cands, refs = make_corpus(args.pairs, args.tokens)
    py_time, py_result = time_kernel(_ngram_py, cands, refs, args.repeat)
    print(f"pure python: {py_time * 1000:8.2f} ms  ({args.pairs} pairs)")

    if _ngram is None:
        print("compiled kernel: not built (pip install -e . rebuilds it)")
        return

    cy_time, cy_result = time_kernel(_ngram, cands, refs, args.repeat)
    if (list(py_result[0]), list(py_result[1])) != (list(cy_result[0]), list(cy_result[1])):
        raise SystemExit("kernel disagreement: compiled != pure python")
    print(f"compiled:    {cy_time * 1000:8.2f} ms  (speedup {py_time / cy_time:.1f}x)")


if __name__ == "__main__":
    main()
