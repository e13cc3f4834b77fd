"""CLI: `finetune run --pairs train.jsonl --config adapter.toml --out dir`.

Trains adapters on a parallel-record JSONL and writes three artifacts to
the output directory: adapters.pt (adapter weights), merged.pt (merged
model state dict), and training_log.json.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import torch

from .backbone import BackboneConfig, TinyCausalLM
from .data import ByteTokenizer, PreparationReport, load_pairs, prepare_examples
from .errors import DivergenceError, FinetuneError, ValidationError
from .lora import AdapterConfig, adapter_state_dict, inject_adapters, merge_adapters
from .train import TrainingSchedule, train_adapters

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib


def _load_config(path) -> tuple[AdapterConfig, TrainingSchedule, int, BackboneConfig]:
    data = {}
    if path is not None:
        with Path(path).open("rb") as fh:
            data = tomllib.load(fh)
    adapter = AdapterConfig(**data.get("adapter", {}))
    schedule = TrainingSchedule(**data.get("schedule", {}))
    backbone = BackboneConfig(**data.get("backbone", {}))
    max_length = int(data.get("max_length", 512))
    return adapter, schedule, max_length, backbone


@click.group()
def cli():
    """Low-rank adapter fine-tuning on parallel fable corpora."""


@cli.command("run")
@click.option("--pairs", "pairs_path", required=True, type=click.Path(exists=True))
@click.option("--val-pairs", "val_path", default=None, type=click.Path(exists=True),
              help="Held-out pairs; defaults to a 10% tail split of --pairs.")
@click.option("--config", "config_path", default=None, type=click.Path(exists=True),
              help="TOML with [adapter], [schedule], [backbone], max_length.")
@click.option("--out", "out_dir", required=True, type=click.Path())
def run(pairs_path, val_path, config_path, out_dir):
    """Prepare examples, train adapters, merge, and write artifacts."""
    adapter_config, schedule, max_length, backbone_config = _load_config(config_path)
    tokenizer = ByteTokenizer()
    report = PreparationReport()
    pairs = load_pairs(pairs_path)
    if val_path:
        train_pairs, val_pairs = pairs, load_pairs(val_path)
    else:
        holdout = max(1, len(pairs) // 10)
        train_pairs, val_pairs = pairs[:-holdout], pairs[-holdout:]
    train_examples = prepare_examples(train_pairs, tokenizer, max_length, report)
    val_examples = prepare_examples(val_pairs, tokenizer, max_length)

    model = inject_adapters(TinyCausalLM(backbone_config), adapter_config)
    log = train_adapters(model, train_examples, val_examples, schedule)
    merged = merge_adapters(model)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    torch.save(adapter_state_dict(model), out / "adapters.pt")
    torch.save(merged.state_dict(), out / "merged.pt")
    (out / "training_log.json").write_text(json.dumps({
        "steps_run": log.steps_run,
        "stopped_early": log.stopped_early,
        "step_losses": log.step_losses,
        "eval_losses": log.eval_losses,
        "prepared": report.prepared,
        "filtered_over_length": report.filtered_over_length,
    }, indent=2))
    click.echo(json.dumps({"out": str(out), "steps_run": log.steps_run,
                           "stopped_early": log.stopped_early,
                           "filtered_over_length": report.filtered_over_length}))


def main(argv=None) -> int:
    try:
        cli.main(args=sys.argv[1:] if argv is None else list(argv),
                 standalone_mode=False)
        return 0
    except click.ClickException as exc:
        sys.stderr.write(exc.format_message() + "\n")
        return 1
    except click.exceptions.Abort:
        return 1
    except DivergenceError as exc:
        sys.stderr.write(f"error (divergence): {exc}\n")
        return 2
    except (ValidationError, FinetuneError, FileNotFoundError, TypeError) as exc:
        sys.stderr.write(f"error (validation): {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
