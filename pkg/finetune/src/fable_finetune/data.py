"""Instruction-format data preparation with target-only loss masking.

Reads parallel-record JSONL (fields `fable` and `translated_fable`; the
other provenance fields are ignored here), renders the translation
instruction, and produces token sequences whose labels mask every prompt
position so only target tokens contribute to gradients.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ValidationError

PROMPT_PREFIX = "Translate the following fable from English to Romanian:"
IGNORE_INDEX = -100
BOS_ID = 256
EOS_ID = 257
PAD_ID = 258
VOCAB_SIZE = 259


class ByteTokenizer:
    """UTF-8 byte-level tokenizer: ids 0-255 plus BOS/EOS/PAD specials."""

    vocab_size = VOCAB_SIZE
    bos_id = BOS_ID
    eos_id = EOS_ID
    pad_id = PAD_ID

    def encode(self, text: str) -> list[int]:
        return list(text.encode("utf-8"))

    def decode(self, ids: list[int]) -> str:
        return bytes(i for i in ids if i < 256).decode("utf-8", errors="replace")


@dataclass(frozen=True)
class TrainingExample:
    input_ids: tuple
    labels: tuple  # IGNORE_INDEX at prompt positions, token ids at target ones
    prompt_length: int

    def __post_init__(self):
        if len(self.input_ids) != len(self.labels):
            raise ValidationError("input_ids and labels must align")
        if not 0 < self.prompt_length < len(self.input_ids):
            raise ValidationError("prompt_length must leave target positions")
        for pos, label in enumerate(self.labels):
            want_masked = pos < self.prompt_length
            if want_masked != (label == IGNORE_INDEX):
                raise ValidationError(f"label mask wrong at position {pos}")


@dataclass
class PreparationReport:
    prepared: int = 0
    filtered_over_length: int = 0


def load_pairs(path) -> list[tuple[str, str]]:
    """(english, romanian) pairs from parallel-record JSONL."""
    pairs = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                source = record["fable"]
                target = record["translated_fable"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValidationError(f"line {lineno}: bad record ({exc})") from exc
            if not source or not target:
                raise ValidationError(f"line {lineno}: empty fable or translation")
            pairs.append((source, target))
    return pairs


def build_prompt(source: str) -> str:
    return f"{PROMPT_PREFIX}\n{source}\n"


def prepare_examples(pairs, tokenizer: ByteTokenizer, max_length: int,
                     report: PreparationReport | None = None) -> list[TrainingExample]:
    """One masked example per pair; over-length pairs are filtered and counted."""
    pairs = list(pairs)
    if not pairs:
        raise ValidationError("no pairs to prepare")
    if max_length < 4:
        raise ValidationError("max_length too small for any example")
    report = report if report is not None else PreparationReport()
    examples = []
    for source, target in pairs:
        prompt_ids = [tokenizer.bos_id] + tokenizer.encode(build_prompt(source))
        target_ids = tokenizer.encode(target) + [tokenizer.eos_id]
        if len(prompt_ids) + len(target_ids) > max_length:
            report.filtered_over_length += 1
            continue
        labels = [IGNORE_INDEX] * len(prompt_ids) + target_ids
        examples.append(TrainingExample(
            input_ids=tuple(prompt_ids + target_ids),
            labels=tuple(labels),
            prompt_length=len(prompt_ids),
        ))
    report.prepared = len(examples)
    return examples
