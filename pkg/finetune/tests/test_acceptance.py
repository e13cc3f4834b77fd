"""Acceptance gate for the fine-tuning package: one test per criterion."""

import pytest
import torch

from toys import tiny_adapter_config, tiny_backbone_config

from fable_finetune.backbone import TinyCausalLM, parameter_checksums
from fable_finetune.data import IGNORE_INDEX
from fable_finetune.lora import (
    adapted_layers,
    expected_parameter_count,
    inject_adapters,
    merge_adapters,
    trainable_parameter_count,
)
from fable_finetune.train import TrainingSchedule, collate, masked_loss, train_adapters


@pytest.fixture
def announce(capsys):
    def _announce(name: str, ok: bool):
        with capsys.disabled():
            print(f"[ACCEPTANCE] {name}: {'PASS' if ok else 'FAIL'}")
        assert ok, f"acceptance criterion failed: {name}"
    return _announce


def test_masked_positions_zero_gradient(announce, adapted_model, examples):
    input_ids, labels = collate(examples[:4])
    logits = adapted_model(input_ids)
    logits.retain_grad()
    masked_loss(logits, labels).backward()
    grad = logits.grad
    ok = grad.abs().sum().item() > 0
    for row in range(labels.size(0)):
        for pos in range(labels.size(1) - 1):
            if labels[row, pos + 1] == IGNORE_INDEX:
                ok = ok and bool(torch.all(grad[row, pos] == 0.0))
    announce("masked-position logits receive exactly zero gradient", ok)


def test_freeze_and_merge(announce, adapted_model, examples):
    before = {n: d for n, d in parameter_checksums(adapted_model).items()
              if "lora_" not in n}
    train_adapters(adapted_model, examples, examples[:2],
                   TrainingSchedule(max_steps=30, eval_every=10, batch_size=4,
                                    learning_rate=1e-3))
    after = {n: d for n, d in parameter_checksums(adapted_model).items()
             if "lora_" not in n}
    frozen_ok = before == after

    merged = merge_adapters(adapted_model)
    adapted_model.eval()
    torch.manual_seed(5)
    probes = [torch.randint(0, 256, (1, length))
              for length in (4, 7, 9, 12, 16, 21, 25, 30)]
    deviation = max(
        (adapted_model(p) - merged(p)).abs().max().item() for p in probes
    )
    merge_ok = len(probes) == 8 and deviation < 1e-4

    torch.manual_seed(3)
    plain = TinyCausalLM(tiny_backbone_config())
    torch.manual_seed(3)
    zero_b = inject_adapters(TinyCausalLM(tiny_backbone_config()),
                             tiny_adapter_config())
    zero_merged = merge_adapters(zero_b)
    exact_ok = all(
        torch.equal(a, b)
        for a, b in zip(plain.state_dict().values(),
                        zero_merged.state_dict().values())
    )
    announce(
        "backbone checksums unchanged by training; merged-vs-unmerged "
        "deviation < 1e-4 on 8 probes; zero-B adapters merge exactly",
        frozen_ok and merge_ok and exact_ok,
    )


def test_trainable_parameter_count(announce, adapted_model):
    config = tiny_backbone_config()
    rank = tiny_adapter_config().rank
    d, f = config.d_model, config.d_ff
    by_hand = config.n_layers * (
        4 * rank * (d + d)      # q/k/v/o projections
        + 2 * rank * (d + f)    # gate/up projections
        + rank * (f + d)        # down projection
    )
    layers_ok = len(adapted_layers(adapted_model)) == config.n_layers * 7
    announce(
        "trainable parameters = r*(d_in+d_out) summed over the seven "
        "projection families",
        layers_ok
        and trainable_parameter_count(adapted_model) == by_hand
        and expected_parameter_count(adapted_model) == by_hand,
    )
