"""From-scratch corpus-level BLEU on the normalized 0-1 scale.

Conventions (fixed so scores are reproducible within this toolkit; parity
with other BLEU toolkits is not promised):
  - tokenizer: lowercase, punctuation split off words, whitespace split,
    Unicode-aware (diacritics survive);
  - clipped modified n-gram precision aggregated over the corpus, n=1..4;
  - add-epsilon smoothing (1e-9) on zero-count precisions;
  - brevity penalty exp(1 - r/c) when the candidate side is shorter,
    0.0 by convention for an empty candidate corpus;
  - single reference per candidate.

The inner counting loop runs in a compiled Cython kernel when available and
falls back to a pure-Python kernel otherwise (force the fallback with
FABLEMT_PURE_BLEU=1). See benchmarks/bench_ngram.py for the comparison.
"""

from __future__ import annotations

import math
import os
import re
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from ..errors import ValidationError

if os.environ.get("FABLEMT_PURE_BLEU") == "1":
    from . import _ngram_py as _kernel
    KERNEL = "python"
else:
    try:
        from . import _ngram as _kernel  # type: ignore[attr-defined]
        KERNEL = "cython"
    except ImportError:
        from . import _ngram_py as _kernel
        KERNEL = "python"

EPSILON = 1e-9

_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)


@dataclass(frozen=True)
class BleuResult:
    score: float
    precisions: tuple
    brevity_penalty: float
    candidate_length: int
    reference_length: int

    def to_json_dict(self) -> dict:
        return {
            "score": self.score,
            "precisions": list(self.precisions),
            "brevity_penalty": self.brevity_penalty,
            "candidate_length": self.candidate_length,
            "reference_length": self.reference_length,
        }


def tokenize(text: str) -> list[str]:
    """Lowercase, split punctuation from words, split on whitespace."""
    return _TOKEN_RE.findall(text.lower())


def ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    """Sliding-window n-grams with multiplicities."""
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def brevity_penalty(candidate_len: int, reference_len: int) -> float:
    """1.0 when the candidate is not shorter; exp(1 - r/c) otherwise."""
    if candidate_len < 0 or reference_len < 0:
        raise ValidationError("lengths must be non-negative")
    if candidate_len == 0:
        return 0.0
    if candidate_len >= reference_len:
        return 1.0
    return math.exp(1.0 - reference_len / candidate_len)


def corpus_bleu(candidates: Sequence[str], references: Sequence[str],
                max_n: int = 4) -> BleuResult:
    """Corpus BLEU over parallel candidate/reference text lists."""
    if len(candidates) != len(references):
        raise ValidationError(
            f"candidate/reference length mismatch: "
            f"{len(candidates)} vs {len(references)}"
        )
    if not candidates:
        raise ValidationError("corpus must be non-empty")

    cand_tokens = [tokenize(text) for text in candidates]
    ref_tokens = [tokenize(text) for text in references]
    matches, totals = _kernel.clipped_match_totals(cand_tokens, ref_tokens, max_n)

    precisions = []
    for n in range(max_n):
        if totals[n] > 0 and matches[n] > 0:
            precisions.append(matches[n] / totals[n])
        else:
            precisions.append(EPSILON)

    candidate_length = sum(len(t) for t in cand_tokens)
    reference_length = sum(len(t) for t in ref_tokens)
    bp = brevity_penalty(candidate_length, reference_length)
    log_mean = sum(math.log(p) for p in precisions) / max_n
    score = bp * math.exp(log_mean)
    return BleuResult(
        score=score,
        precisions=tuple(precisions),
        brevity_penalty=bp,
        candidate_length=candidate_length,
        reference_length=reference_length,
    )
