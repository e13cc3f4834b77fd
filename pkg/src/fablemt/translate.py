"""Chat-endpoint translation driver with retries and bounded concurrency.

The wire contract is the de-facto chat-completion shape: POST
{base_url}/chat/completions with a model name, a single-user-message list,
temperature, and max_tokens; the response carries the completion text under
choices[0].message.content and optional token usage.
"""

from __future__ import annotations

import json
import logging
import math
import os
import random
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

import requests

from .corpus import (
    ParallelRecord,
    SourceFable,
    compute_prompt_hash,
    emit_parallel_records,
)
from .errors import EmptyCompletionError, TransportError, ValidationError

logger = logging.getLogger(__name__)

TRANSLATION_PROMPT_PREFIX = "Translate the following fable from English to Romanian:"

RETRYABLE_STATUSES = frozenset({429, 500, 502, 503, 504})


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str
    model_name: str
    api_key_ref: Optional[str] = None
    timeout: float = 60.0
    max_retries: int = 3
    max_concurrency: int = 8

    def __post_init__(self):
        if self.max_concurrency < 1:
            raise ValidationError("max_concurrency must be >= 1")
        if self.max_retries < 0:
            raise ValidationError("max_retries must be >= 0")
        if self.timeout <= 0:
            raise ValidationError("timeout must be > 0")


@dataclass(frozen=True)
class DecodingParams:
    temperature: float = 0.0
    max_output_tokens: int = 1024

    def __post_init__(self):
        if not 0.0 <= self.temperature <= 2.0:
            raise ValidationError("temperature must be in [0, 2]")
        if self.max_output_tokens < 1:
            raise ValidationError("max_output_tokens must be >= 1")


@dataclass(frozen=True)
class TranslationResult:
    record_id: int
    output_text: str
    prompt_used: str
    input_tokens: int
    output_tokens: int
    latency_ms: float
    attempts: int
    tokens_estimated: bool = False


@dataclass
class RunSummary:
    succeeded: int
    failed: int
    input_tokens: int
    output_tokens: int
    tokens_estimated: bool
    wall_time_s: float


def estimate_tokens(text: str) -> int:
    """Fallback when the endpoint omits usage: ceil(chars / 4)."""
    return math.ceil(len(text) / 4)


def build_translation_prompt(fable: SourceFable) -> str:
    """Instruction prefix, newline, fable text. Pure."""
    if not fable.text:
        raise ValidationError("cannot build a prompt for an empty fable")
    return f"{TRANSLATION_PROMPT_PREFIX}\n{fable.text}"


class ChatClient:
    """Minimal chat-completion client with exponential-backoff retries.

    backoff_base is the first sleep in seconds (doubled each retry, with
    uniform jitter); tests shrink it to keep runs fast.
    """

    def __init__(self, config: EndpointConfig, backoff_base: float = 1.0,
                 session: Optional[requests.Session] = None,
                 rng: Optional[random.Random] = None):
        self.config = config
        self.backoff_base = backoff_base
        self.session = session or requests.Session()
        self.rng = rng or random.Random()

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.config.api_key_ref:
            key = os.environ.get(self.config.api_key_ref)
            if key:
                headers["Authorization"] = f"Bearer {key}"
        return headers

    def complete(self, prompt: str, params: DecodingParams) -> tuple[str, Optional[dict], int, float]:
        """One chat completion with retries.

        Returns (text, usage-or-None, attempts, latency_ms). Raises
        TransportError when retries are exhausted and EmptyCompletionError
        for blank completions.
        """
        url = self.config.base_url.rstrip("/") + "/chat/completions"
        body = {
            "model": self.config.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
            "max_tokens": params.max_output_tokens,
        }
        start = time.monotonic()
        last_status = None
        last_error = None
        attempts = self.config.max_retries + 1
        for attempt in range(1, attempts + 1):
            try:
                resp = self.session.post(
                    url, json=body, headers=self._headers(), timeout=self.config.timeout
                )
            except requests.RequestException as exc:
                last_error = exc
                last_status = None
            else:
                last_status = resp.status_code
                if resp.status_code == 200:
                    latency_ms = (time.monotonic() - start) * 1000.0
                    data = resp.json()
                    text = data["choices"][0]["message"]["content"] or ""
                    usage = data.get("usage")
                    if not text.strip():
                        raise EmptyCompletionError(
                            "endpoint returned an empty completion",
                            status=200, attempts=attempt,
                        )
                    return text, usage, attempt, latency_ms
                if resp.status_code not in RETRYABLE_STATUSES:
                    raise TransportError(
                        f"endpoint returned HTTP {resp.status_code}",
                        status=resp.status_code, attempts=attempt,
                    )
            if attempt < attempts:
                delay = self.backoff_base * (2 ** (attempt - 1))
                time.sleep(delay * self.rng.uniform(0.5, 1.5))
        detail = f"HTTP {last_status}" if last_status is not None else repr(last_error)
        raise TransportError(
            f"retries exhausted after {attempts} attempts (last: {detail})",
            status=last_status, attempts=attempts,
        )


def translate_one(endpoint: EndpointConfig, fable: SourceFable,
                  params: DecodingParams,
                  client: Optional[ChatClient] = None) -> TranslationResult:
    """Translate one fable, retrying transient failures."""
    client = client or ChatClient(endpoint)
    prompt = build_translation_prompt(fable)
    text, usage, attempts, latency_ms = client.complete(prompt, params)
    if usage and "prompt_tokens" in usage and "completion_tokens" in usage:
        input_tokens = usage["prompt_tokens"]
        output_tokens = usage["completion_tokens"]
        estimated = False
    else:
        input_tokens = estimate_tokens(prompt)
        output_tokens = estimate_tokens(text)
        estimated = True
    return TranslationResult(
        record_id=fable.id,
        output_text=text,
        prompt_used=prompt,
        input_tokens=input_tokens,
        output_tokens=output_tokens,
        latency_ms=latency_ms,
        attempts=attempts,
        tokens_estimated=estimated,
    )


def _translate_with_regen(endpoint, fable, params, client) -> TranslationResult:
    # Blank completions get one regeneration before counting as a failure.
    try:
        return translate_one(endpoint, fable, params, client=client)
    except EmptyCompletionError:
        logger.warning("empty completion for record %d; regenerating once", fable.id)
        return translate_one(endpoint, fable, params, client=client)


def failure_log_path(sink) -> Path:
    return Path(str(sink) + ".failures.jsonl")


def translate_corpus(endpoint: EndpointConfig, fables: Iterable[SourceFable],
                     params: DecodingParams, sink,
                     client: Optional[ChatClient] = None,
                     clock=time.time) -> RunSummary:
    """Batch-translate fables and emit schema-valid parallel records.

    Output is ordered by record_id regardless of completion order; failures
    go to a sidecar log next to the sink. At most max_concurrency requests
    are in flight at once.
    """
    sink = Path(sink)
    try:
        sink.parent.mkdir(parents=True, exist_ok=True)
        with sink.open("a", encoding="utf-8"):
            pass
    except OSError as exc:
        raise ValidationError(f"sink is not writable: {sink} ({exc})") from exc

    fables = list(fables)
    client = client or ChatClient(endpoint)
    start = time.monotonic()
    results: dict[int, TranslationResult] = {}
    failures: dict[int, str] = {}

    with ThreadPoolExecutor(max_workers=endpoint.max_concurrency) as pool:
        futures = {
            pool.submit(_translate_with_regen, endpoint, fable, params, client): fable
            for fable in fables
        }
        for future in as_completed(futures):
            fable = futures[future]
            try:
                results[fable.id] = future.result()
            except (TransportError, ValidationError) as exc:
                failures[fable.id] = str(exc)

    records = []
    for fable in sorted(fables, key=lambda f: f.id):
        result = results.get(fable.id)
        if result is None:
            continue
        records.append(ParallelRecord(
            fable=fable.text,
            translated_fable=result.output_text,
            pipeline_stage="translation",
            source_lang="English",
            target_lang="Romanian",
            prompt_hash=compute_prompt_hash(result.prompt_used),
            llm_name=endpoint.model_name,
            translation_model=endpoint.model_name,
            generation_timestamp=int(clock()),
        ))
    emit_parallel_records(records, sink)

    with failure_log_path(sink).open("w", encoding="utf-8") as fh:
        for record_id in sorted(failures):
            fh.write(json.dumps({"record_id": record_id, "cause": failures[record_id]}))
            fh.write("\n")

    return RunSummary(
        succeeded=len(records),
        failed=len(failures),
        input_tokens=sum(r.input_tokens for r in results.values()),
        output_tokens=sum(r.output_tokens for r in results.values()),
        tokens_estimated=any(r.tokens_estimated for r in results.values()),
        wall_time_s=time.monotonic() - start,
    )
