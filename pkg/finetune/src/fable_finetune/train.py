"""Adapter training: AdamW, cosine schedule, early stopping, frozen backbone."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

import torch
from torch import nn

from .data import IGNORE_INDEX, PAD_ID, TrainingExample
from .errors import DivergenceError, ValidationError
from .lora import trainable_parameters


@dataclass(frozen=True)
class TrainingSchedule:
    learning_rate: float = 2e-4
    warmup_fraction: float = 0.03
    batch_size: int = 8
    accumulation_steps: int = 1
    max_steps: int = 200
    eval_every: int = 20
    patience: int = 3  # early-stop after this many non-improving evaluations
    seed: int = 42

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be > 0")
        if not 0.0 <= self.warmup_fraction < 1.0:
            raise ValidationError("warmup_fraction must be in [0, 1)")
        for name in ("batch_size", "accumulation_steps", "max_steps",
                     "eval_every", "patience"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be >= 1")


@dataclass
class TrainingLog:
    step_losses: list = field(default_factory=list)
    eval_losses: list = field(default_factory=list)  # (step, loss)
    stopped_early: bool = False
    steps_run: int = 0


def collate(batch: list[TrainingExample]) -> tuple[torch.Tensor, torch.Tensor]:
    """Right-pad a batch; padded label positions are ignored by the loss."""
    width = max(len(ex.input_ids) for ex in batch)
    input_ids = torch.full((len(batch), width), PAD_ID, dtype=torch.long)
    labels = torch.full((len(batch), width), IGNORE_INDEX, dtype=torch.long)
    for row, ex in enumerate(batch):
        input_ids[row, :len(ex.input_ids)] = torch.tensor(ex.input_ids)
        labels[row, :len(ex.labels)] = torch.tensor(ex.labels)
    return input_ids, labels


def masked_loss(logits: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """Next-token cross-entropy; IGNORE_INDEX positions contribute nothing."""
    shifted_logits = logits[:, :-1, :].reshape(-1, logits.size(-1))
    shifted_labels = labels[:, 1:].reshape(-1)
    return nn.functional.cross_entropy(shifted_logits, shifted_labels,
                                       ignore_index=IGNORE_INDEX)


def evaluate_loss(model: nn.Module, examples, batch_size: int) -> float:
    model.eval()
    total, batches = 0.0, 0
    with torch.no_grad():
        for start in range(0, len(examples), batch_size):
            input_ids, labels = collate(examples[start:start + batch_size])
            total += masked_loss(model(input_ids), labels).item()
            batches += 1
    model.train()
    return total / batches


def train_adapters(model: nn.Module, train_examples, val_examples,
                   schedule: TrainingSchedule = TrainingSchedule()) -> TrainingLog:
    """Optimize adapter parameters only; the backbone stays frozen.

    Early stopping: training halts once validation loss fails to improve
    for `patience` consecutive evaluations. A non-finite training loss
    aborts with a diagnostic rather than continuing silently.
    """
    if not train_examples:
        raise ValidationError("train_examples must be non-empty")
    if not val_examples:
        raise ValidationError("val_examples must be non-empty for early stopping")
    params = trainable_parameters(model)
    if not params:
        raise ValidationError("model has no trainable adapter parameters")

    rng = random.Random(schedule.seed)
    torch.manual_seed(schedule.seed)
    optimizer = torch.optim.AdamW(params, lr=schedule.learning_rate)
    warmup_steps = max(1, int(schedule.max_steps * schedule.warmup_fraction))

    def lr_lambda(step: int) -> float:
        if step < warmup_steps:
            return (step + 1) / warmup_steps
        progress = (step - warmup_steps) / max(1, schedule.max_steps - warmup_steps)
        return 0.5 * (1.0 + math.cos(math.pi * min(progress, 1.0)))

    scheduler = torch.optim.lr_scheduler.LambdaLR(optimizer, lr_lambda)
    log = TrainingLog()
    best_val = float("inf")
    bad_evals = 0
    pool = list(train_examples)
    model.train()

    for step in range(schedule.max_steps):
        optimizer.zero_grad()
        accumulated = 0.0
        for _ in range(schedule.accumulation_steps):
            batch = rng.sample(pool, min(schedule.batch_size, len(pool)))
            input_ids, labels = collate(batch)
            loss = masked_loss(model(input_ids), labels) / schedule.accumulation_steps
            loss.backward()
            accumulated += loss.item()
        if not math.isfinite(accumulated):
            raise DivergenceError(
                f"training loss became non-finite at step {step}", step=step
            )
        optimizer.step()
        scheduler.step()
        log.step_losses.append(accumulated)
        log.steps_run = step + 1

        if (step + 1) % schedule.eval_every == 0:
            val = evaluate_loss(model, val_examples, schedule.batch_size)
            log.eval_losses.append((step + 1, val))
            if val < best_val - 1e-6:
                best_val = val
                bad_evals = 0
            else:
                bad_evals += 1
                if bad_evals >= schedule.patience:
                    log.stopped_early = True
                    break
    return log
