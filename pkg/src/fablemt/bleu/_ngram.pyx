# cython: language_level=3, boundscheck=False, wraparound=False
"""Cython n-gram kernel: clipped-match and candidate-total counts.

Same integer arithmetic as fablemt.bleu._ngram_py; selected at import when
the compiled extension is available.
"""


def clipped_match_totals(list candidates, list references, int max_n):
    """Corpus-level clipped n-gram statistics.

    Returns (matches, totals), each a list of length max_n where index n-1
    holds the summed clipped matches / candidate n-gram counts for order n.
    """
    cdef Py_ssize_t pair, i, cand_len, ref_len
    cdef int n
    cdef list matches = [0] * max_n
    cdef list totals = [0] * max_n
    cdef list cand, ref
    cdef dict cand_counts, ref_counts
    cdef tuple gram
    cdef object count, ref_count

    for pair in range(len(candidates)):
        cand = candidates[pair]
        ref = references[pair]
        cand_len = len(cand)
        ref_len = len(ref)
        for n in range(1, max_n + 1):
            if cand_len < n:
                continue
            cand_counts = {}
            for i in range(cand_len - n + 1):
                gram = tuple(cand[i:i + n])
                cand_counts[gram] = cand_counts.get(gram, 0) + 1
            ref_counts = {}
            for i in range(ref_len - n + 1):
                gram = tuple(ref[i:i + n])
                ref_counts[gram] = ref_counts.get(gram, 0) + 1
            totals[n - 1] += cand_len - n + 1
            clipped = 0
            for gram, count in cand_counts.items():
                ref_count = ref_counts.get(gram, 0)
                clipped += count if count < ref_count else ref_count
            matches[n - 1] += clipped
    return matches, totals
