"""Single CLI entry point: corpus, translate, judge, bleu, cost, bench.

Exit codes: 0 success, 1 validation/usage error, 2 transport error.
With --json-errors, failures print a machine-readable JSON object on
stderr instead of plain text. Secrets travel only through environment
variables named in endpoint configs, never flags.
"""

from __future__ import annotations

import json
import logging
import sys
from decimal import Decimal
from pathlib import Path

import click

from . import DEFAULT_SEED, bench as bench_mod, bleu as bleu_mod, cost as cost_mod
from . import corpus as corpus_mod, judge as judge_mod, translate as translate_mod
from .errors import TransportError, ValidationError

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

logger = logging.getLogger(__name__)


def _load_endpoint(path) -> translate_mod.EndpointConfig:
    with Path(path).open("rb") as fh:
        data = tomllib.load(fh)
    try:
        return bench_mod._endpoint_from_table(data)
    except KeyError as exc:
        raise ValidationError(f"endpoint config missing key {exc}") from exc


@click.group()
@click.option("--json-errors", is_flag=True, help="Emit failures as JSON on stderr.")
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True,
              help="Seed for every stochastic operation.")
@click.option("--log-level", default="WARNING", show_default=True)
@click.pass_context
def cli(ctx, json_errors, seed, log_level):
    """Literary EN->RO translation pipeline and evaluation toolkit."""
    logging.basicConfig(level=getattr(logging, log_level.upper(), logging.WARNING))
    ctx.obj = {"seed": seed}
    logger.info("run seed: %d", seed)


# ---------------------------------------------------------------- corpus

@cli.group("corpus")
def corpus_group():
    """Validate, dedupe, and split parallel-record JSONL files."""


@corpus_group.command("validate")
@click.argument("path", type=click.Path(exists=True))
def corpus_validate(path):
    """Check every line against the nine-field record schema."""
    report = corpus_mod.LoadReport()
    count = sum(1 for _ in corpus_mod.load_parallel_records(path, report=report))
    click.echo(json.dumps({"valid": count, "invalid": report.skip_count,
                           "invalid_lines": [n for n, _ in report.skipped]}))
    if report.skip_count:
        raise ValidationError(f"{report.skip_count} invalid record(s) in {path}")


@corpus_group.command("dedupe")
@click.argument("path", type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
def corpus_dedupe(path, out):
    """Drop records repeating an earlier prompt_hash."""
    records = list(corpus_mod.load_parallel_records(path))
    kept, removed = corpus_mod.dedupe(records)
    corpus_mod.emit_parallel_records(kept, out)
    click.echo(json.dumps({"kept": len(kept), "removed": removed}))


@corpus_group.command("split")
@click.argument("path", type=click.Path(exists=True))
@click.option("--train", "n_train", required=True, type=int)
@click.option("--val", "n_val", required=True, type=int)
@click.option("--test", "n_test", required=True, type=int)
@click.option("--seed", type=int, default=None, help="Override the global seed.")
@click.option("--out-dir", required=True, type=click.Path())
@click.pass_context
def corpus_split(ctx, path, n_train, n_val, n_test, seed, out_dir):
    """Seeded shuffle + contiguous slice into train/validation/test files."""
    seed = seed if seed is not None else ctx.obj["seed"]
    records = list(corpus_mod.load_parallel_records(path))
    split = corpus_mod.split_corpus(records, (n_train, n_val, n_test), seed)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, part in (("train", split.train), ("validation", split.validation),
                       ("test", split.test)):
        corpus_mod.emit_parallel_records(part, out_dir / f"{name}.jsonl")
    click.echo(json.dumps({"train": len(split.train), "validation": len(split.validation),
                           "test": len(split.test), "seed": seed}))


# ------------------------------------------------------------- translate

@cli.command("translate")
@click.argument("action", type=click.Choice(["run"]))
@click.option("--endpoint", "endpoint_path", required=True, type=click.Path(exists=True),
              help="TOML endpoint config.")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--temperature", type=float, default=0.0, show_default=True)
@click.option("--max-output-tokens", type=int, default=1024, show_default=True)
@click.option("--concurrency", type=int, default=None,
              help="Override the config's max_concurrency.")
@click.option("--limit", type=int, default=None)
def translate_cmd(action, endpoint_path, in_path, out_path, temperature,
                  max_output_tokens, concurrency, limit):
    """Batch-translate a fable JSONL through a chat endpoint."""
    endpoint = _load_endpoint(endpoint_path)
    if concurrency is not None:
        endpoint = translate_mod.EndpointConfig(
            base_url=endpoint.base_url, model_name=endpoint.model_name,
            api_key_ref=endpoint.api_key_ref, timeout=endpoint.timeout,
            max_retries=endpoint.max_retries, max_concurrency=concurrency,
        )
    params = translate_mod.DecodingParams(
        temperature=temperature, max_output_tokens=max_output_tokens,
    )
    fables = corpus_mod.load_source_corpus(in_path, limit=limit)
    summary = translate_mod.translate_corpus(endpoint, fables, params, out_path)
    click.echo(json.dumps({
        "succeeded": summary.succeeded, "failed": summary.failed,
        "input_tokens": summary.input_tokens, "output_tokens": summary.output_tokens,
        "tokens_estimated": summary.tokens_estimated,
        "wall_time_s": round(summary.wall_time_s, 3),
    }))


# ----------------------------------------------------------------- judge

@cli.command("judge")
@click.argument("action", type=click.Choice(["run"]))
@click.option("--systems", "system_paths", multiple=True, required=True,
              type=click.Path(exists=True), help="Parallel-record JSONL per system.")
@click.option("--judge", "judge_paths", multiple=True, required=True,
              type=click.Path(exists=True), help="TOML judge endpoint config(s).")
@click.option("--n", "sample_size", type=int, default=100, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--reference", default=None,
              help="Reference system name for the bias report (default: first).")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_context
def judge_cmd(ctx, action, system_paths, judge_paths, sample_size, seed,
              reference, out_path):
    """Rubric-judge one or more systems; two+ judges produce a bias report."""
    seed = seed if seed is not None else ctx.obj["seed"]
    systems = {}
    for path in system_paths:
        records = list(corpus_mod.load_parallel_records(path))
        systems[Path(path).stem] = [(r.fable, r.translated_fable) for r in records]
    judges = {
        j.model_name: j for j in (_load_endpoint(p) for p in judge_paths)
    }
    if len(judges) >= 2:
        reference = reference or next(iter(systems))
        report = judge_mod.cross_judge_check(systems, judges, sample_size, seed,
                                             reference=reference)
        payload = report.to_json_dict()
    else:
        judge_endpoint = next(iter(judges.values()))
        payload = {
            name: judge_mod.evaluate_system(
                pairs, judge_endpoint, sample_size, seed, system_name=name,
            ).to_json_dict()
            for name, pairs in systems.items()
        }
    Path(out_path).write_text(json.dumps(payload, indent=2, ensure_ascii=False))
    click.echo(json.dumps({"written": str(out_path)}))


# ------------------------------------------------------------------ bleu

@cli.command("bleu")
@click.argument("action", type=click.Choice(["score"]))
@click.option("--candidates", required=True, type=click.Path(exists=True))
@click.option("--references", required=True, type=click.Path(exists=True))
@click.option("--field", "field_name", default="translated_fable", show_default=True)
def bleu_cmd(action, candidates, references, field_name):
    """Corpus BLEU between two JSONL files on the chosen text field."""
    def texts(path):
        out = []
        with Path(path).open("r", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    data = json.loads(line)
                    if field_name not in data:
                        raise ValidationError(
                            f"record in {path} lacks field {field_name!r}"
                        )
                    out.append(data[field_name])
        return out

    result = bleu_mod.corpus_bleu(texts(candidates), texts(references))
    click.echo(json.dumps(result.to_json_dict()))


# ------------------------------------------------------------------ cost

@cli.group("cost")
def cost_group():
    """Token-pricing and GPU-rental cost projections."""


def _pricing_entry(pricing_path, model) -> cost_mod.PricingEntry:
    table = cost_mod.load_pricing(pricing_path)
    if model not in table:
        raise ValidationError(
            f"model {model!r} not in pricing table (have: {', '.join(sorted(table))})"
        )
    return table[model]


@cost_group.command("estimate")
@click.option("--pricing", "pricing_path", type=click.Path(exists=True), default=None,
              help="TOML pricing table (defaults to the packaged table).")
@click.option("--model", required=True)
@click.option("--items", required=True, type=int)
@click.option("--in", "tokens_in", required=True, type=int, help="Input tokens per item.")
@click.option("--out", "tokens_out", required=True, type=int, help="Output tokens per item.")
@click.option("--reasoning", default="0", show_default=True,
              help="Reasoning-token multiplier (x visible output).")
def cost_estimate(pricing_path, model, items, tokens_in, tokens_out, reasoning):
    """Dollar projection for one token scenario."""
    entry = _pricing_entry(pricing_path, model)
    scenario = cost_mod.CostScenario(items, tokens_in, tokens_out,
                                     reasoning_multiplier=Decimal(reasoning))
    estimate = cost_mod.estimate_cost(scenario, entry)
    click.echo(json.dumps({"model": model, **estimate.to_json_dict()}))


@cost_group.command("sweep")
@click.option("--pricing", "pricing_path", type=click.Path(exists=True), default=None)
@click.option("--model", required=True)
@click.option("--items", required=True, type=int)
@click.option("--low", nargs=2, type=int, default=(300, 300), show_default=True)
@click.option("--mid", nargs=2, type=int, default=(450, 450), show_default=True)
@click.option("--high", nargs=2, type=int, default=(600, 600), show_default=True)
@click.option("--multipliers", default="0.5,1.0,3.0", show_default=True)
def cost_sweep(pricing_path, model, items, low, mid, high, multipliers):
    """Sensitivity sweep over reasoning-token multipliers."""
    entry = _pricing_entry(pricing_path, model)
    mults = [Decimal(m) for m in multipliers.split(",")]
    sweep = cost_mod.sensitivity_sweep(entry, items, tuple(low), tuple(mid),
                                       tuple(high), multipliers=mults)
    payload = {
        str(m): [e.to_json_dict() for e in row] for m, row in sweep.items()
    }
    click.echo(json.dumps({"model": model, "rows": payload}))


@cost_group.command("rental")
@click.argument("cluster_hours", type=float)
@click.option("--rate", default="10.80", show_default=True,
              help="Dollars per cluster-hour.")
def cost_rental(cluster_hours, rate):
    """GPU-cluster rental cost: rate x cluster-hours."""
    total = cost_mod.rental_cost(cluster_hours, Decimal(rate))
    click.echo(json.dumps({"cluster_hours": cluster_hours, "rate": rate,
                           "total_dollars": str(total)}))


# ----------------------------------------------------------------- bench

@cli.command("bench")
@click.argument("action", type=click.Choice(["run"]))
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--format", "formats", multiple=True, default=("markdown", "csv"),
              show_default=True)
def bench_cmd(action, config_path, formats):
    """Run a configured experiment and render report tables."""
    config = bench_mod.load_experiment_config(config_path)
    report = bench_mod.run_experiment(config)
    written = [str(bench_mod.render_report(report, fmt, config.output_dir))
               for fmt in formats]
    click.echo(json.dumps({"rows": len(report.rows), "partial": report.partial,
                           "reports": written}))


# ------------------------------------------------------------------ main

def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    json_errors = "--json-errors" in argv

    def fail(kind: str, message: str, code: int) -> int:
        if json_errors:
            sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
        else:
            sys.stderr.write(f"error ({kind}): {message}\n")
        return code

    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.NoArgsIsHelpError as exc:
        sys.stderr.write(exc.format_message() + "\n")
        return 1
    except click.UsageError as exc:
        if exc.ctx is not None:
            sys.stderr.write(exc.ctx.get_usage() + "\n")
        return fail("usage", exc.format_message(), 1)
    except click.ClickException as exc:
        return fail("usage", exc.format_message(), 1)
    except click.exceptions.Abort:
        return 1
    except ValidationError as exc:
        return fail("validation", str(exc), 1)
    except TransportError as exc:
        return fail("transport", str(exc), 2)
    except FileNotFoundError as exc:
        return fail("validation", str(exc), 1)


if __name__ == "__main__":
    sys.exit(main())
