"""Pure-Python n-gram kernel: clipped-match and candidate-total counts.

This is the fallback for the Cython extension; both implement the same
integer arithmetic and must agree exactly.
"""

from collections import Counter


def clipped_match_totals(candidates, references, max_n):
    """Corpus-level clipped n-gram statistics.

    candidates, references: parallel lists of token lists.
    Returns (matches, totals), each a list of length max_n where index n-1
    holds the summed clipped matches / candidate n-gram counts for order n.
    """
    matches = [0] * max_n
    totals = [0] * max_n
    for cand, ref in zip(candidates, references):
        for n in range(1, max_n + 1):
            cand_counts = Counter(
                tuple(cand[i:i + n]) for i in range(len(cand) - n + 1)
            )
            if not cand_counts:
                continue
            ref_counts = Counter(
                tuple(ref[i:i + n]) for i in range(len(ref) - n + 1)
            )
            totals[n - 1] += sum(cand_counts.values())
            matches[n - 1] += sum(
                min(count, ref_counts[gram]) for gram, count in cand_counts.items()
            )
    return matches, totals
