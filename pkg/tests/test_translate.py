import json
import time

import pytest

from support import stub_endpoint
from stubserver import StubServer, chat_response, echo_behavior

from fablemt.corpus import SourceFable, compute_prompt_hash, load_parallel_records
from fablemt.errors import EmptyCompletionError, TransportError, ValidationError
from fablemt.translate import (
    ChatClient,
    DecodingParams,
    EndpointConfig,
    TRANSLATION_PROMPT_PREFIX,
    build_translation_prompt,
    estimate_tokens,
    failure_log_path,
    translate_corpus,
    translate_one,
)

GREEDY = DecodingParams(temperature=0.0, max_output_tokens=256)


class TestPromptBuilding:
    def test_prefix_and_newline(self):
        fable = SourceFable(0, "The fox praised the crow.")
        assert build_translation_prompt(fable) == (
            "Translate the following fable from English to Romanian:\n"
            "The fox praised the crow."
        )

    def test_verbatim_prefix(self):
        assert TRANSLATION_PROMPT_PREFIX == (
            "Translate the following fable from English to Romanian:"
        )

    def test_pure(self):
        fable = SourceFable(3, "A tale.")
        assert build_translation_prompt(fable) == build_translation_prompt(fable)

    def test_hash_composition(self):
        prompt = build_translation_prompt(SourceFable(0, "A tale."))
        digest = compute_prompt_hash(prompt)
        assert len(digest) == 64 and int(digest, 16) >= 0

    def test_injective_in_text(self):
        a = build_translation_prompt(SourceFable(0, "one"))
        b = build_translation_prompt(SourceFable(0, "two"))
        assert a != b

    def test_empty_fable(self):
        with pytest.raises(ValidationError):
            build_translation_prompt(SourceFable(0, ""))


class TestConfigValidation:
    def test_bad_concurrency(self):
        with pytest.raises(ValidationError):
            EndpointConfig(base_url="http://x", model_name="m", max_concurrency=0)

    def test_bad_temperature(self):
        with pytest.raises(ValidationError):
            DecodingParams(temperature=2.5)

    def test_bad_max_tokens(self):
        with pytest.raises(ValidationError):
            DecodingParams(max_output_tokens=0)


class TestTranslateOne:
    def test_echo_deterministic(self, echo_server):
        endpoint = stub_endpoint(echo_server)
        fable = SourceFable(0, "The fox praised the crow.")
        a = translate_one(endpoint, fable, GREEDY)
        b = translate_one(endpoint, fable, GREEDY)
        assert a.output_text == b.output_text == "The fox praised the crow."
        assert a.attempts == 1

    def test_retry_then_success(self):
        def behavior(body, count):
            if count <= 2:
                return 500, {"error": "boom"}
            return 200, chat_response("ok text")

        server = StubServer(behavior)
        try:
            endpoint = stub_endpoint(server, max_retries=3)
            client = ChatClient(endpoint, backoff_base=0.01)
            result = translate_one(endpoint, SourceFable(0, "x"), GREEDY, client=client)
            assert result.attempts == 3
            assert result.output_text == "ok text"
        finally:
            server.close()

    def test_retries_exhausted(self):
        server = StubServer(lambda body, count: (503, {"error": "down"}))
        try:
            endpoint = stub_endpoint(server, max_retries=2)
            client = ChatClient(endpoint, backoff_base=0.01)
            with pytest.raises(TransportError) as exc_info:
                translate_one(endpoint, SourceFable(0, "x"), GREEDY, client=client)
            assert exc_info.value.attempts == 3
            assert exc_info.value.status == 503
            assert server.request_count == 3
        finally:
            server.close()

    def test_empty_completion_distinct_error(self):
        server = StubServer(lambda body, count: (200, chat_response("   ")))
        try:
            endpoint = stub_endpoint(server)
            with pytest.raises(EmptyCompletionError):
                translate_one(endpoint, SourceFable(0, "x"), GREEDY)
        finally:
            server.close()

    def test_token_estimate_fallback(self):
        server = StubServer(
            lambda body, count: (200, chat_response("four char chunks!", with_usage=False))
        )
        try:
            endpoint = stub_endpoint(server)
            result = translate_one(endpoint, SourceFable(0, "x"), GREEDY)
            assert result.tokens_estimated
            assert result.output_tokens == estimate_tokens("four char chunks!")
        finally:
            server.close()

    def test_non_retryable_status_fails_fast(self):
        server = StubServer(lambda body, count: (401, {"error": "no auth"}))
        try:
            endpoint = stub_endpoint(server, max_retries=3)
            with pytest.raises(TransportError):
                translate_one(endpoint, SourceFable(0, "x"), GREEDY)
            assert server.request_count == 1
        finally:
            server.close()


class TestTranslateCorpus:
    def test_all_succeed_ordered(self, echo_server, tmp_path):
        endpoint = stub_endpoint(echo_server)
        fables = [SourceFable(i, f"Story number {i}.") for i in range(10)]
        sink = tmp_path / "pairs.jsonl"
        summary = translate_corpus(endpoint, fables, GREEDY, sink, clock=lambda: 1700000000)
        assert summary.succeeded == 10 and summary.failed == 0
        records = list(load_parallel_records(sink))
        assert [r.fable for r in records] == [f.text for f in fables]
        for r in records:
            assert r.pipeline_stage == "translation"
            assert r.source_lang == "English" and r.target_lang == "Romanian"
            assert r.llm_name == endpoint.model_name
            assert r.prompt_hash == compute_prompt_hash(
                f"{TRANSLATION_PROMPT_PREFIX}\n{r.fable}")

    def test_partial_failures_logged(self, tmp_path):
        def behavior(body, count):
            prompt = body["messages"][0]["content"]
            if "FAIL" in prompt:
                return 500, {"error": "no"}
            return echo_behavior(body, count)

        server = StubServer(behavior)
        try:
            endpoint = stub_endpoint(server, max_retries=0)
            fables = [
                SourceFable(i, f"Story FAIL {i}." if i in (3, 7) else f"Story {i}.")
                for i in range(10)
            ]
            sink = tmp_path / "pairs.jsonl"
            client = ChatClient(endpoint, backoff_base=0.01)
            summary = translate_corpus(endpoint, fables, GREEDY, sink, client=client)
            assert summary.succeeded == 8 and summary.failed == 2
            records = list(load_parallel_records(sink))
            assert len(records) == 8
            failures = [json.loads(line) for line in
                        failure_log_path(sink).read_text().splitlines()]
            assert [f["record_id"] for f in failures] == [3, 7]
            # at-most-once: no id in both output and failure log
            ok_texts = {r.fable for r in records}
            assert all(f"Story FAIL {f['record_id']}." not in ok_texts for f in failures)
        finally:
            server.close()

    def test_token_totals_accumulate(self, echo_server, tmp_path):
        endpoint = stub_endpoint(echo_server)
        fables = [SourceFable(i, f"Story {i}.") for i in range(5)]
        summary = translate_corpus(endpoint, fables, GREEDY, tmp_path / "p.jsonl")
        assert summary.input_tokens > 0 and summary.output_tokens > 0

    def test_concurrency_bound_respected(self, tmp_path):
        def behavior(body, count):
            time.sleep(0.05)
            return echo_behavior(body, count)

        server = StubServer(behavior)
        try:
            endpoint = stub_endpoint(server, max_concurrency=3)
            fables = [SourceFable(i, f"Story {i}.") for i in range(12)]
            translate_corpus(endpoint, fables, GREEDY, tmp_path / "p.jsonl")
            assert server.max_in_flight <= 3
        finally:
            server.close()

    def test_unwritable_sink_aborts_before_requests(self, echo_server, tmp_path):
        endpoint = stub_endpoint(echo_server)
        sink = tmp_path / "dir_as_sink"
        sink.mkdir()
        with pytest.raises(ValidationError):
            translate_corpus(endpoint, [SourceFable(0, "x")], GREEDY, sink)
        assert echo_server.request_count == 0

    def test_empty_completion_regenerated_once(self, tmp_path):
        def behavior(body, count):
            if count == 1:
                return 200, chat_response("")
            return echo_behavior(body, count)

        server = StubServer(behavior)
        try:
            endpoint = stub_endpoint(server, max_concurrency=1)
            summary = translate_corpus(endpoint, [SourceFable(0, "Story.")], GREEDY,
                                       tmp_path / "p.jsonl")
            assert summary.succeeded == 1
            assert server.request_count == 2
        finally:
            server.close()
