"""Low-rank adapter injection, counting, and merging.

Each adapted linear W (d_out x d_in) gains factors A (r x d_in) and
B (d_out x r); the adapter path adds scaling * B @ A @ x with
scaling = alpha / r. B starts at zero so an untrained adapter is a no-op,
and merging folds W' = W + scaling * B @ A back into the base weight.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field

import torch
from torch import nn

from .backbone import PROJECTION_FAMILIES
from .errors import ValidationError


@dataclass(frozen=True)
class AdapterConfig:
    rank: int = 32
    alpha: float = 32.0
    dropout: float = 0.05
    target_families: tuple = PROJECTION_FAMILIES
    # bias adaptation is deliberately unsupported: adapters touch weights only

    def __post_init__(self):
        if self.rank < 1:
            raise ValidationError("rank must be >= 1")
        if not self.target_families:
            raise ValidationError("target_families must be non-empty")
        unknown = set(self.target_families) - set(PROJECTION_FAMILIES)
        if unknown:
            raise ValidationError(f"unknown projection families: {sorted(unknown)}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValidationError("dropout must be in [0, 1)")

    @property
    def scaling(self) -> float:
        return self.alpha / self.rank


class LoRALinear(nn.Module):
    """A frozen linear layer plus a trainable low-rank residual path."""

    def __init__(self, base: nn.Linear, config: AdapterConfig):
        super().__init__()
        if base.bias is not None:
            raise ValidationError("bias adaptation is disabled")
        self.base = base
        self.base.weight.requires_grad_(False)
        self.scaling = config.scaling
        self.dropout = nn.Dropout(config.dropout)
        d_out, d_in = base.weight.shape
        self.lora_a = nn.Parameter(torch.empty(config.rank, d_in))
        self.lora_b = nn.Parameter(torch.zeros(d_out, config.rank))
        nn.init.kaiming_uniform_(self.lora_a, a=math.sqrt(5))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        residual = self.dropout(x) @ self.lora_a.t() @ self.lora_b.t()
        return self.base(x) + self.scaling * residual


def inject_adapters(model: nn.Module, config: AdapterConfig) -> nn.Module:
    """Freeze the whole model, then wrap every targeted projection in place."""
    for param in model.parameters():
        param.requires_grad_(False)
    replaced = 0
    for module in model.modules():
        for name, child in list(module.named_children()):
            if name in config.target_families and isinstance(child, nn.Linear):
                setattr(module, name, LoRALinear(child, config))
                replaced += 1
    if not replaced:
        raise ValidationError("no projection modules matched the target families")
    return model


def adapted_layers(model: nn.Module) -> list[LoRALinear]:
    return [m for m in model.modules() if isinstance(m, LoRALinear)]


def trainable_parameters(model: nn.Module) -> list[nn.Parameter]:
    return [p for p in model.parameters() if p.requires_grad]


def trainable_parameter_count(model: nn.Module) -> int:
    return sum(p.numel() for p in trainable_parameters(model))


def expected_parameter_count(model: nn.Module) -> int:
    """r * (d_in + d_out) summed over every adapted matrix."""
    total = 0
    for layer in adapted_layers(model):
        d_out, d_in = layer.base.weight.shape
        rank = layer.lora_a.shape[0]
        total += rank * (d_in + d_out)
    return total


def merge_adapters(model: nn.Module) -> nn.Module:
    """Return a plain copy with W' = W + scaling * B @ A folded in."""
    merged = copy.deepcopy(model)
    merged.eval()
    found = False
    for module in merged.modules():
        for name, child in list(module.named_children()):
            if isinstance(child, LoRALinear):
                found = True
                delta = child.scaling * (child.lora_b @ child.lora_a)
                if delta.shape != child.base.weight.shape:
                    raise ValidationError(
                        f"adapter delta shape {tuple(delta.shape)} does not "
                        f"match weight {tuple(child.base.weight.shape)}"
                    )
                with torch.no_grad():
                    child.base.weight += delta
                setattr(module, name, child.base)
    if not found:
        raise ValidationError("model has no adapters to merge")
    return merged


def adapter_state_dict(model: nn.Module) -> dict[str, torch.Tensor]:
    return {
        name: tensor
        for name, tensor in model.state_dict().items()
        if "lora_a" in name or "lora_b" in name
    }
