"""LLM-as-judge rubric scoring: prompting, strict JSON parsing, aggregation,
and the cross-family bias check.

"Count" semantics: a sample counts toward the per-dimension means only if
the judge response parsed successfully, after at most one automatic re-ask.
Still-failing samples land in `excluded` and do not affect the means.
"""

from __future__ import annotations

import json
import logging
import random
import re
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .errors import SchemaError, ValidationError
from .translate import ChatClient, DecodingParams, EndpointConfig

logger = logging.getLogger(__name__)

DIMENSIONS = ("accuracy", "fluency", "coherence", "style", "cultural")

JUDGE_PROMPT_PREAMBLE = (
    "You are a professional translation evaluator. You will be given an "
    "English fable and a Romanian translation. Evaluate the translation for "
    "accuracy, fluency, coherence, style, and cultural/pragmatic fidelity. "
    "Provide a score from 1 to 5 for each category along with a brief "
    "justification. Output your evaluation in valid JSON format with fields "
    "for each score and justification."
)

# The judge's own decoding is greedy by default; the rubric needs stability,
# not diversity.
JUDGE_DECODING = DecodingParams(temperature=0.0, max_output_tokens=1024)


@dataclass(frozen=True)
class RubricScores:
    accuracy: int
    fluency: int
    coherence: int
    style: int
    cultural: int
    justifications: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for dim in DIMENSIONS:
            value = getattr(self, dim)
            if isinstance(value, bool) or not isinstance(value, int):
                raise SchemaError(f"score {dim!r} must be an integer, got {value!r}")
            if not 1 <= value <= 5:
                raise SchemaError(f"score {dim!r} out of range 1-5: {value}")

    def as_dict(self) -> dict:
        return {dim: getattr(self, dim) for dim in DIMENSIONS}


@dataclass
class SystemEvaluation:
    system_name: str
    per_dimension_mean: dict
    avg_score: float
    count: int
    excluded: list
    judge_name: str
    sample_seed: int

    def to_json_dict(self) -> dict:
        return {
            "system_name": self.system_name,
            "per_dimension_mean": dict(self.per_dimension_mean),
            "avg_score": self.avg_score,
            "count": self.count,
            "excluded": [{"record_id": rid, "cause": cause} for rid, cause in self.excluded],
            "judge_name": self.judge_name,
            "sample_seed": self.sample_seed,
        }


@dataclass
class BiasReport:
    systems: list
    reference: str
    scores_by_judge: dict
    gaps_to_reference: dict
    mean_across_judges: dict
    ranking_stable: bool

    def to_json_dict(self) -> dict:
        return {
            "systems": list(self.systems),
            "reference": self.reference,
            "scores_by_judge": {j: dict(s) for j, s in self.scores_by_judge.items()},
            "gaps_to_reference": {j: dict(s) for j, s in self.gaps_to_reference.items()},
            "mean_across_judges": dict(self.mean_across_judges),
            "ranking_stable": self.ranking_stable,
        }


def build_judge_prompt(source_en: str, translation_ro: str) -> str:
    """Evaluator instruction followed by labeled source/translation blocks."""
    if not source_en or not translation_ro:
        raise ValidationError("both the source and the translation must be non-empty")
    return (
        f"{JUDGE_PROMPT_PREAMBLE}\n\n"
        f"English fable:\n{source_en}\n\n"
        f"Romanian translation:\n{translation_ro}"
    )


def _extract_json_object(raw: str) -> dict:
    # Tolerate code fences and surrounding prose: try a decode at every '{'.
    decoder = json.JSONDecoder()
    for match in re.finditer(r"\{", raw):
        try:
            obj, _ = decoder.raw_decode(raw, match.start())
        except json.JSONDecodeError:
            continue
        if isinstance(obj, dict):
            return obj
    raise SchemaError(f"no JSON object found in judge response: {raw!r}")


def parse_judge_response(raw: str) -> RubricScores:
    """Parse a judge response into RubricScores.

    Framing is lenient (fences, prose); content is strict (all five keys,
    integer scores in 1-5). Justifications are kept verbatim when present,
    either under per-dimension "<dim>_justification" keys or a
    "justifications" sub-object.
    """
    obj = _extract_json_object(raw)
    scores = {}
    for dim in DIMENSIONS:
        if dim not in obj:
            raise SchemaError(f"judge response missing key {dim!r}")
        scores[dim] = obj[dim]
    justifications = {}
    nested = obj.get("justifications")
    if isinstance(nested, dict):
        justifications.update({k: str(v) for k, v in nested.items()})
    for dim in DIMENSIONS:
        key = f"{dim}_justification"
        if key in obj:
            justifications[dim] = str(obj[key])
    return RubricScores(**scores, justifications=justifications)


def average_score(per_dimension_mean: Mapping[str, float]) -> float:
    """Arithmetic mean of the five per-dimension values."""
    missing = [d for d in DIMENSIONS if d not in per_dimension_mean]
    if missing:
        raise ValidationError(f"missing dimension(s): {', '.join(missing)}")
    values = [per_dimension_mean[d] for d in DIMENSIONS]
    for v in values:
        if not 1.0 <= v <= 5.0:
            raise ValidationError(f"dimension mean out of range [1, 5]: {v}")
    return sum(values) / 5.0


def sample_indices(population: int, sample_size: int, seed: int) -> list[int]:
    """Seeded uniform sample without replacement, shared across systems."""
    if sample_size > population:
        raise ValidationError(
            f"sample_size {sample_size} exceeds population {population}"
        )
    return random.Random(seed).sample(range(population), sample_size)


def _judge_pair(client: ChatClient, source_en: str, translation_ro: str) -> RubricScores:
    prompt = build_judge_prompt(source_en, translation_ro)
    text, _, _, _ = client.complete(prompt, JUDGE_DECODING)
    try:
        return parse_judge_response(text)
    except SchemaError:
        # One automatic re-ask on parse failure.
        text, _, _, _ = client.complete(prompt, JUDGE_DECODING)
        return parse_judge_response(text)


def evaluate_system(pairs: Sequence[tuple[str, str]], judge_endpoint: EndpointConfig,
                    sample_size: int, seed: int,
                    system_name: str = "system",
                    client: Optional[ChatClient] = None,
                    indices: Optional[Sequence[int]] = None) -> SystemEvaluation:
    """Judge a seeded sample of (english, romanian) pairs.

    Record ids are the positions of pairs in the input sequence. A caller
    may pass explicit `indices` to reuse one sample across systems.
    """
    if not pairs:
        raise ValidationError("pairs must be non-empty")
    if indices is None:
        indices = sample_indices(len(pairs), sample_size, seed)
    client = client or ChatClient(judge_endpoint)

    scored: dict[int, RubricScores] = {}
    excluded: list[tuple[int, str]] = []
    with ThreadPoolExecutor(max_workers=judge_endpoint.max_concurrency) as pool:
        futures = {
            pool.submit(_judge_pair, client, pairs[i][0], pairs[i][1]): i
            for i in indices
        }
        for future in as_completed(futures):
            i = futures[future]
            try:
                scored[i] = future.result()
            except (SchemaError, ValidationError) as exc:
                excluded.append((i, str(exc)))

    excluded.sort()
    per_dim = {}
    if scored:
        for dim in DIMENSIONS:
            per_dim[dim] = sum(getattr(s, dim) for s in scored.values()) / len(scored)
        avg = average_score(per_dim)
    else:
        per_dim = {dim: float("nan") for dim in DIMENSIONS}
        avg = float("nan")
    return SystemEvaluation(
        system_name=system_name,
        per_dimension_mean=per_dim,
        avg_score=avg,
        count=len(scored),
        excluded=excluded,
        judge_name=judge_endpoint.model_name,
        sample_seed=seed,
    )


def bias_report(scores_by_judge: Mapping[str, Mapping[str, float]],
                reference: str) -> BiasReport:
    """Pure arithmetic over per-(judge, system) average scores.

    Gap = reference score - system score, per judge. Ranking is stable iff
    no two judges strictly invert any pair of systems; ties are compatible
    with either order.
    """
    judges = list(scores_by_judge)
    if len(judges) < 2:
        raise ValidationError("a bias report needs at least two judges")
    systems = list(next(iter(scores_by_judge.values())))
    for judge_name, scores in scores_by_judge.items():
        if set(scores) != set(systems):
            raise ValidationError(
                f"judge {judge_name!r} covers a different system set"
            )
    if reference not in systems:
        raise ValidationError(f"reference system {reference!r} not among systems")

    gaps = {
        judge_name: {
            system: scores[reference] - scores[system] for system in systems
        }
        for judge_name, scores in scores_by_judge.items()
    }
    mean_across = {
        system: sum(scores_by_judge[j][system] for j in judges) / len(judges)
        for system in systems
    }
    # Stable iff no pair of systems is strictly inverted between two judges;
    # a tie under one judge is compatible with either strict order.
    stable = True
    for i, a in enumerate(systems):
        for b in systems[i + 1:]:
            signs = set()
            for scores in scores_by_judge.values():
                diff = scores[a] - scores[b]
                if diff:
                    signs.add(diff > 0)
            if len(signs) == 2:
                stable = False
    return BiasReport(
        systems=systems,
        reference=reference,
        scores_by_judge={j: dict(s) for j, s in scores_by_judge.items()},
        gaps_to_reference=gaps,
        mean_across_judges=mean_across,
        ranking_stable=stable,
    )


def cross_judge_check(systems: Mapping[str, Sequence[tuple[str, str]]],
                      judges: Mapping[str, EndpointConfig],
                      sample_size: int, seed: int, reference: str,
                      clients: Optional[Mapping[str, ChatClient]] = None) -> BiasReport:
    """Re-score the identical seeded sample with every judge.

    All systems must cover the same record ids (same pair count here, since
    ids are positional). Each judge sees the systems in a randomized order.
    """
    if len(judges) < 2:
        raise ValidationError("cross-judge check needs at least two judges")
    sizes = {name: len(pairs) for name, pairs in systems.items()}
    if len(set(sizes.values())) != 1:
        raise ValidationError(f"systems cover different record ids: {sizes}")
    population = next(iter(sizes.values()))
    indices = sample_indices(population, sample_size, seed)

    scores: dict[str, dict[str, float]] = {}
    for judge_name, endpoint in judges.items():
        order = list(systems)
        random.Random(f"{seed}:{judge_name}").shuffle(order)
        client = clients[judge_name] if clients else None
        scores[judge_name] = {}
        for system_name in order:
            evaluation = evaluate_system(
                systems[system_name], endpoint, sample_size, seed,
                system_name=system_name, client=client, indices=indices,
            )
            scores[judge_name][system_name] = evaluation.avg_score
    return bias_report(scores, reference)
