"""Experiment orchestration: multi-system comparisons, temperature sweeps,
tuned-vs-base deltas, and paper-shaped report rendering.

Rows run sequentially (predictable endpoint rate limits); the translate and
judge stages use their own bounded concurrency within a row. Raw artifacts
(translations, judge JSON, BLEU JSON) are always persisted for audit.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Optional, Sequence

from . import bleu as bleu_mod
from .corpus import load_parallel_records, load_source_corpus
from .errors import TransportError, ValidationError
from .judge import DIMENSIONS, SystemEvaluation, evaluate_system, sample_indices
from .translate import DecodingParams, EndpointConfig, translate_corpus

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

logger = logging.getLogger(__name__)

DEFAULT_TEMPERATURES = (0.0, 0.2, 1.0)


def round_half_up(value: float, digits: int) -> float:
    """Decimal round-half-up; table values like 4.835 must print as 4.84."""
    q = Decimal(1).scaleb(-digits)
    return float(Decimal(str(value)).quantize(q, rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class SystemSpec:
    name: str
    endpoint: EndpointConfig
    temperatures: Optional[tuple] = None  # per-system override (tab-2 style)
    baseline: Optional[str] = None  # name of the untuned base, for deltas


@dataclass
class ExperimentConfig:
    systems: list
    judge: EndpointConfig
    source_set: Path
    reference_set: Path
    output_dir: Path
    temperatures: tuple = DEFAULT_TEMPERATURES
    sample_size: int = 100
    seed: int = 42
    max_output_tokens: int = 1024

    def __post_init__(self):
        if not self.temperatures:
            raise ValidationError("temperatures must be non-empty")
        if self.sample_size < 1:
            raise ValidationError("sample_size must be >= 1")


@dataclass
class BenchRow:
    system: str
    temperature: float
    evaluation: Optional[SystemEvaluation]
    bleu: Optional[bleu_mod.BleuResult]
    error: Optional[str] = None


@dataclass
class BenchReport:
    rows: list
    deltas: list = field(default_factory=list)  # (system, baseline, T, d_avg, d_bleu)
    partial: bool = False


def _endpoint_from_table(table: dict) -> EndpointConfig:
    return EndpointConfig(
        base_url=table["base_url"],
        model_name=table["model_name"],
        api_key_ref=table.get("api_key_ref"),
        timeout=float(table.get("timeout", 60.0)),
        max_retries=int(table.get("max_retries", 3)),
        max_concurrency=int(table.get("max_concurrency", 8)),
    )


def load_experiment_config(path) -> ExperimentConfig:
    """Read an experiment config from TOML (schema in the README)."""
    path = Path(path)
    with path.open("rb") as fh:
        data = tomllib.load(fh)
    try:
        systems = [
            SystemSpec(
                name=entry["name"],
                endpoint=_endpoint_from_table(entry),
                temperatures=tuple(entry["temperatures"]) if "temperatures" in entry else None,
                baseline=entry.get("baseline"),
            )
            for entry in data["systems"]
        ]
        config = ExperimentConfig(
            systems=systems,
            judge=_endpoint_from_table(data["judge"]),
            source_set=Path(data["source_set"]),
            reference_set=Path(data["reference_set"]),
            output_dir=Path(data["output_dir"]),
            temperatures=tuple(data.get("temperatures", DEFAULT_TEMPERATURES)),
            sample_size=int(data.get("sample_size", 100)),
            seed=int(data.get("seed", 42)),
            max_output_tokens=int(data.get("max_output_tokens", 1024)),
        )
    except KeyError as exc:
        raise ValidationError(f"experiment config missing key {exc}") from exc
    return config


def run_experiment(config: ExperimentConfig, clock=None) -> BenchReport:
    """Translate, judge, and BLEU-score every (system, temperature) pair.

    All systems share one seeded sample of source fables. A failed stage
    yields a row with explicit nulls and an error message; remaining rows
    still run.
    """
    fables = list(load_source_corpus(config.source_set))
    references = list(load_parallel_records(config.reference_set))
    if len(references) < len(fables):
        raise ValidationError(
            f"reference set covers {len(references)} records but the source "
            f"set has {len(fables)} fables"
        )
    indices = sorted(sample_indices(len(fables), config.sample_size, config.seed))
    sampled = [fables[i] for i in indices]
    ref_texts = {i: references[i].translated_fable for i in indices}

    artifacts_root = config.output_dir / "artifacts"
    rows = []
    partial = False
    clock_kwargs = {"clock": clock} if clock is not None else {}

    for system in config.systems:
        for temperature in system.temperatures or config.temperatures:
            row_dir = artifacts_root / f"{system.name}_T{temperature}"
            row_dir.mkdir(parents=True, exist_ok=True)
            params = DecodingParams(
                temperature=temperature,
                max_output_tokens=config.max_output_tokens,
            )
            try:
                sink = row_dir / "translations.jsonl"
                translate_corpus(system.endpoint, sampled, params, sink, **clock_kwargs)
                translated = list(load_parallel_records(sink))
                pairs = [(r.fable, r.translated_fable) for r in translated]
                if not pairs:
                    raise TransportError("no successful translations for this row")
                evaluation = evaluate_system(
                    pairs, config.judge, len(pairs), config.seed,
                    system_name=system.name, indices=range(len(pairs)),
                )
                (row_dir / "judge.json").write_text(
                    json.dumps(evaluation.to_json_dict(), indent=2, ensure_ascii=False)
                )
                by_text = {r.fable: r.translated_fable for r in translated}
                candidates, refs = [], []
                for i, fable in zip(indices, sampled):
                    if fable.text in by_text:
                        candidates.append(by_text[fable.text])
                        refs.append(ref_texts[i])
                bleu_result = bleu_mod.corpus_bleu(candidates, refs)
                (row_dir / "bleu.json").write_text(
                    json.dumps(bleu_result.to_json_dict(), indent=2)
                )
                rows.append(BenchRow(system.name, temperature, evaluation, bleu_result))
            except (TransportError, ValidationError) as exc:
                logger.warning("row %s T=%s failed: %s", system.name, temperature, exc)
                rows.append(BenchRow(system.name, temperature, None, None, error=str(exc)))
                partial = True

    deltas = _compute_deltas(config.systems, rows)
    return BenchReport(rows=rows, deltas=deltas, partial=partial)


def _compute_deltas(systems: Sequence[SystemSpec], rows: Sequence[BenchRow]) -> list:
    by_key = {(r.system, r.temperature): r for r in rows}
    deltas = []
    for system in systems:
        if not system.baseline:
            continue
        for (name, temperature), row in by_key.items():
            if name != system.name or row.evaluation is None:
                continue
            base = by_key.get((system.baseline, temperature))
            if base is None or base.evaluation is None:
                continue
            deltas.append((
                system.name,
                system.baseline,
                temperature,
                row.evaluation.avg_score - base.evaluation.avg_score,
                row.bleu.score - base.bleu.score,
            ))
    return deltas


def _best_flags(rows: Sequence[BenchRow]) -> dict:
    """Per rubric column, the set of rows holding the best (rounded) value."""
    flags = {dim: set() for dim in DIMENSIONS}
    scored = [r for r in rows if r.evaluation is not None]
    for dim in DIMENSIONS:
        if not scored:
            continue
        best = max(round_half_up(r.evaluation.per_dimension_mean[dim], 2) for r in scored)
        for idx, row in enumerate(rows):
            if row.evaluation is None:
                continue
            if round_half_up(row.evaluation.per_dimension_mean[dim], 2) == best:
                flags[dim].add(idx)
    return flags


def render_report(report: BenchReport, fmt: str, output_dir) -> Path:
    """Render the rubric, BLEU, and delta tables as markdown or CSV.

    Rubric values round to 2 decimals, BLEU to 4 (half-up). The best value
    per rubric column is flagged (bold in markdown, a best_dims column in
    CSV). Returns the written file path.
    """
    if fmt not in ("markdown", "csv"):
        raise ValidationError(f"unknown report format: {fmt!r}")
    if not report.rows:
        raise ValidationError("cannot render an empty report")
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    flags = _best_flags(report.rows)
    if fmt == "markdown":
        path = output_dir / "report.md"
        path.write_text(_render_markdown(report, flags), encoding="utf-8")
    else:
        path = output_dir / "report.csv"
        with path.open("w", encoding="utf-8", newline="") as fh:
            _render_csv(report, flags, fh)
    return path


def _fmt2(value) -> str:
    return f"{round_half_up(value, 2):.2f}"


def _fmt4(value) -> str:
    return f"{round_half_up(value, 4):.4f}"


def _render_markdown(report: BenchReport, flags: dict) -> str:
    lines = ["# Benchmark report", "", "## Rubric scores", ""]
    header = ["System", "T", "Accuracy", "Fluency", "Coherence", "Style",
              "Cultural", "Avg", "Count"]
    lines.append("| " + " | ".join(header) + " |")
    lines.append("|" + "---|" * len(header))
    for idx, row in enumerate(report.rows):
        cells = [row.system, str(row.temperature)]
        if row.evaluation is None:
            cells += ["-"] * 7
        else:
            for dim in DIMENSIONS:
                value = _fmt2(row.evaluation.per_dimension_mean[dim])
                cells.append(f"**{value}**" if idx in flags[dim] else value)
            cells.append(_fmt2(row.evaluation.avg_score))
            cells.append(str(row.evaluation.count))
        lines.append("| " + " | ".join(cells) + " |")

    lines += ["", "## BLEU", "", "| System | T | BLEU | Notes |", "|---|---|---|---|"]
    for row in report.rows:
        note = row.error or ""
        score = _fmt4(row.bleu.score) if row.bleu is not None else "-"
        lines.append(f"| {row.system} | {row.temperature} | {score} | {note} |")

    lines += ["", "## Deltas (tuned - base)", ""]
    if report.deltas:
        lines += ["| System | Baseline | T | dAvg | dBLEU |", "|---|---|---|---|---|"]
        for system, baseline, temperature, d_avg, d_bleu in report.deltas:
            lines.append(
                f"| {system} | {baseline} | {temperature} | "
                f"{_fmt2(d_avg)} | {_fmt4(d_bleu)} |"
            )
    else:
        lines.append("(no baseline pairs configured)")
    lines.append("")
    return "\n".join(lines)


def _render_csv(report: BenchReport, flags: dict, fh) -> None:
    writer = csv.writer(fh)
    writer.writerow([
        "system", "temperature", "accuracy", "fluency", "coherence", "style",
        "cultural", "avg_score", "count", "bleu", "error", "best_dims",
    ])
    for idx, row in enumerate(report.rows):
        if row.evaluation is None:
            writer.writerow([row.system, row.temperature] + [""] * 7
                            + ["", row.error or "", ""])
            continue
        best_dims = ";".join(d for d in DIMENSIONS if idx in flags[d])
        writer.writerow(
            [row.system, row.temperature]
            + [_fmt2(row.evaluation.per_dimension_mean[d]) for d in DIMENSIONS]
            + [_fmt2(row.evaluation.avg_score), row.evaluation.count,
               _fmt4(row.bleu.score), row.error or "", best_dims]
        )
