"""fablemt: batch pipeline and evaluation toolkit for literary EN->RO
machine translation.

Subsystems: corpus (JSONL schema, dedupe, splits), translate (chat-endpoint
batch driver), judge (LLM rubric scoring), bleu (corpus BLEU), cost (token
pricing and GPU-rental projections), bench (experiment orchestration).
"""

__version__ = "0.1.0"

DEFAULT_SEED = 42
