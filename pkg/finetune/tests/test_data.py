import pytest

from toys import PAIRS, write_pairs_jsonl

from fable_finetune.data import (
    IGNORE_INDEX,
    ByteTokenizer,
    PreparationReport,
    TrainingExample,
    build_prompt,
    load_pairs,
    prepare_examples,
)
from fable_finetune.errors import ValidationError


class TestLoadPairs:
    def test_round_trip(self, tmp_path):
        path = write_pairs_jsonl(tmp_path / "pairs.jsonl")
        assert load_pairs(path) == PAIRS

    def test_missing_field(self, tmp_path):
        (tmp_path / "bad.jsonl").write_text('{"fable": "x"}\n')
        with pytest.raises(ValidationError, match="line 1"):
            load_pairs(tmp_path / "bad.jsonl")

    def test_empty_translation(self, tmp_path):
        (tmp_path / "bad.jsonl").write_text(
            '{"fable": "x", "translated_fable": ""}\n')
        with pytest.raises(ValidationError, match="empty"):
            load_pairs(tmp_path / "bad.jsonl")


class TestTokenizer:
    def test_byte_round_trip(self):
        tok = ByteTokenizer()
        text = "Vulpea şireată."
        assert tok.decode(tok.encode(text)) == text

    def test_specials_outside_byte_range(self):
        tok = ByteTokenizer()
        assert {tok.bos_id, tok.eos_id, tok.pad_id}.isdisjoint(range(256))


class TestPrepareExamples:
    def test_prompt_positions_masked_target_unmasked(self, examples):
        tok = ByteTokenizer()
        for example, (source, target) in zip(examples, PAIRS):
            masked = example.labels[:example.prompt_length]
            unmasked = example.labels[example.prompt_length:]
            assert all(label == IGNORE_INDEX for label in masked)
            assert list(unmasked) == tok.encode(target) + [tok.eos_id]

    def test_masked_fraction_equals_prompt_fraction(self, examples):
        # Independent recount: the mask must cover exactly the prompt tokens.
        tok = ByteTokenizer()
        for example, (source, _target) in zip(examples, PAIRS):
            prompt_tokens = 1 + len(tok.encode(build_prompt(source)))  # +BOS
            masked = sum(1 for label in example.labels if label == IGNORE_INDEX)
            assert masked == prompt_tokens == example.prompt_length

    def test_one_example_per_pair(self, examples):
        assert len(examples) == len(PAIRS)

    def test_over_length_filtered_and_counted(self):
        report = PreparationReport()
        long_pair = ("word " * 100, "cuvânt " * 100)
        examples = prepare_examples([PAIRS[0], long_pair], ByteTokenizer(),
                                    max_length=200, report=report)
        assert len(examples) == 1
        assert report.filtered_over_length == 1
        assert report.prepared == 1

    def test_empty_input_rejected(self):
        with pytest.raises(ValidationError, match="no pairs"):
            prepare_examples([], ByteTokenizer(), max_length=64)

    def test_example_invariant_enforced(self):
        with pytest.raises(ValidationError, match="label mask"):
            TrainingExample(input_ids=(1, 2, 3), labels=(IGNORE_INDEX, 2, 3),
                            prompt_length=2)
