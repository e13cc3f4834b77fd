"""Low-rank adapter fine-tuning for causal language models.

Consumes the parallel-record JSONL produced by the translation pipeline
and trains LoRA adapters over the seven projection families of a causal
transformer, then merges them back into the base weights.
"""

__version__ = "0.1.0"
