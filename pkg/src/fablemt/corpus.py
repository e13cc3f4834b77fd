"""Corpus ingestion, deduplication, splitting, and JSONL emission.

The parallel-record schema is fixed: nine fields, emitted in a stable order
so outputs diff cleanly. Readers must not rely on field order.
"""

from __future__ import annotations

import hashlib
import json
import logging
import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence

from .errors import SchemaError, ValidationError

logger = logging.getLogger(__name__)

HASH_RE = re.compile(r"^[0-9a-f]{64}$")

# Emission order of the parallel-record schema.
PARALLEL_FIELDS = (
    "fable",
    "translated_fable",
    "pipeline_stage",
    "source_lang",
    "target_lang",
    "prompt_hash",
    "llm_name",
    "translation_model",
    "generation_timestamp",
)


@dataclass(frozen=True)
class SourceFable:
    """One English source fable with its positional ingest id."""

    id: int
    text: str


@dataclass(frozen=True)
class ParallelRecord:
    fable: str
    translated_fable: str
    pipeline_stage: str
    source_lang: str
    target_lang: str
    prompt_hash: str
    llm_name: str
    translation_model: str
    generation_timestamp: int

    def validate(self) -> None:
        """Raise SchemaError on the first violated invariant."""
        if not self.fable:
            raise SchemaError("record field 'fable' is empty")
        if not self.translated_fable:
            raise SchemaError("record field 'translated_fable' is empty")
        for name in ("pipeline_stage", "source_lang", "target_lang",
                     "llm_name", "translation_model"):
            if not isinstance(getattr(self, name), str) or not getattr(self, name):
                raise SchemaError(f"record field {name!r} is empty")
        if not isinstance(self.prompt_hash, str) or not HASH_RE.match(self.prompt_hash):
            raise SchemaError(
                "record field 'prompt_hash' is not a 64-char lowercase hex digest"
            )
        if not isinstance(self.generation_timestamp, int) or self.generation_timestamp <= 0:
            raise SchemaError(
                "record field 'generation_timestamp' is not a positive integer"
            )

    def to_json(self) -> str:
        payload = {name: getattr(self, name) for name in PARALLEL_FIELDS}
        return json.dumps(payload, ensure_ascii=False)

    @classmethod
    def from_dict(cls, data: dict) -> "ParallelRecord":
        missing = [name for name in PARALLEL_FIELDS if name not in data]
        if missing:
            raise SchemaError(f"record missing field(s): {', '.join(missing)}")
        return cls(**{name: data[name] for name in PARALLEL_FIELDS})


@dataclass
class CorpusSplit:
    train: list
    validation: list
    test: list
    seed: int


@dataclass
class LoadReport:
    """Side channel for streaming loads: line numbers that failed to parse."""

    skipped: list = field(default_factory=list)

    @property
    def skip_count(self) -> int:
        return len(self.skipped)


def compute_prompt_hash(prompt: str) -> str:
    """SHA-256 of the prompt's UTF-8 bytes, lowercase hex."""
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


def load_source_corpus(
    path, limit: Optional[int] = None, report: Optional[LoadReport] = None
) -> Iterator[SourceFable]:
    """Stream source fables from a JSONL file with a "fable" text field.

    Malformed lines are skipped with a warning (and recorded in *report*
    when given); ids are assigned positionally over the valid lines.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such corpus file: {path}")
    next_id = 0
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if limit is not None and next_id >= limit:
                break
            if not line.strip():
                continue
            try:
                data = json.loads(line)
                text = data["fable"]
                if not isinstance(text, str) or not text:
                    raise ValueError("'fable' is not a non-empty string")
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                logger.warning("skipping malformed line %d of %s: %s", line_no, path, exc)
                if report is not None:
                    report.skipped.append((line_no, str(exc)))
                continue
            yield SourceFable(id=next_id, text=text)
            next_id += 1


def load_parallel_records(
    path, report: Optional[LoadReport] = None
) -> Iterator[ParallelRecord]:
    """Stream schema-validated parallel records from a JSONL file."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such corpus file: {path}")
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = ParallelRecord.from_dict(json.loads(line))
                record.validate()
            except (json.JSONDecodeError, SchemaError, TypeError) as exc:
                logger.warning("skipping malformed line %d of %s: %s", line_no, path, exc)
                if report is not None:
                    report.skipped.append((line_no, str(exc)))
                continue
            yield record


def dedupe(records: Iterable[ParallelRecord]) -> tuple[list, int]:
    """Keep the first record per prompt_hash, preserving order.

    Returns (kept records, removed count).
    """
    seen = set()
    kept = []
    removed = 0
    for record in records:
        if record.prompt_hash in seen:
            removed += 1
        else:
            seen.add(record.prompt_hash)
            kept.append(record)
    return kept, removed


def split_corpus(records: Sequence, counts: tuple[int, int, int], seed: int) -> CorpusSplit:
    """Seeded uniform shuffle, then contiguous slicing into train/val/test."""
    records = list(records)
    n_train, n_val, n_test = counts
    expected = n_train + n_val + n_test
    if expected != len(records):
        raise ValidationError(
            f"split counts sum to {expected} but corpus has {len(records)} records"
        )
    indices = list(range(len(records)))
    random.Random(seed).shuffle(indices)
    shuffled = [records[i] for i in indices]
    return CorpusSplit(
        train=shuffled[:n_train],
        validation=shuffled[n_train:n_train + n_val],
        test=shuffled[n_train + n_val:],
        seed=seed,
    )


def emit_parallel_records(records: Iterable[ParallelRecord], sink) -> int:
    """Write records as JSONL (fixed field order). Validates everything first
    so a validation failure leaves no partial output file.
    """
    records = list(records)
    for i, record in enumerate(records):
        try:
            record.validate()
        except SchemaError as exc:
            raise SchemaError(f"record {i}: {exc}") from exc
    sink = Path(sink)
    with sink.open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(record.to_json())
            fh.write("\n")
    return len(records)
