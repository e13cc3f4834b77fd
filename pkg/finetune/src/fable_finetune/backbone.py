"""A small causal transformer exposing the standard projection families.

The architecture mirrors the layout of mainstream open decoder models:
per-layer attention projections (q_proj, k_proj, v_proj, o_proj) and a
gated MLP (gate_proj, up_proj, down_proj). Adapter injection targets these
seven module names, so anything trained here transfers structurally to a
full-size backbone.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import torch
from torch import nn

from .errors import ValidationError

PROJECTION_FAMILIES = (
    "q_proj", "k_proj", "v_proj", "o_proj", "gate_proj", "up_proj", "down_proj",
)


@dataclass(frozen=True)
class BackboneConfig:
    vocab_size: int = 259  # 256 bytes + BOS/EOS/PAD
    d_model: int = 32
    n_heads: int = 2
    n_layers: int = 2
    d_ff: int = 64
    max_position: int = 512

    def __post_init__(self):
        if self.d_model % self.n_heads:
            raise ValidationError("d_model must be divisible by n_heads")
        for field in ("vocab_size", "d_model", "n_heads", "n_layers", "d_ff",
                      "max_position"):
            if getattr(self, field) < 1:
                raise ValidationError(f"{field} must be >= 1")


class Attention(nn.Module):
    def __init__(self, config: BackboneConfig):
        super().__init__()
        self.n_heads = config.n_heads
        self.head_dim = config.d_model // config.n_heads
        self.q_proj = nn.Linear(config.d_model, config.d_model, bias=False)
        self.k_proj = nn.Linear(config.d_model, config.d_model, bias=False)
        self.v_proj = nn.Linear(config.d_model, config.d_model, bias=False)
        self.o_proj = nn.Linear(config.d_model, config.d_model, bias=False)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        batch, seq, d_model = x.shape
        shape = (batch, seq, self.n_heads, self.head_dim)
        q = self.q_proj(x).view(shape).transpose(1, 2)
        k = self.k_proj(x).view(shape).transpose(1, 2)
        v = self.v_proj(x).view(shape).transpose(1, 2)
        scores = q @ k.transpose(-2, -1) / math.sqrt(self.head_dim)
        mask = torch.triu(torch.ones(seq, seq, dtype=torch.bool, device=x.device),
                          diagonal=1)
        scores = scores.masked_fill(mask, float("-inf"))
        out = torch.softmax(scores, dim=-1) @ v
        out = out.transpose(1, 2).reshape(batch, seq, d_model)
        return self.o_proj(out)


class GatedMLP(nn.Module):
    def __init__(self, config: BackboneConfig):
        super().__init__()
        self.gate_proj = nn.Linear(config.d_model, config.d_ff, bias=False)
        self.up_proj = nn.Linear(config.d_model, config.d_ff, bias=False)
        self.down_proj = nn.Linear(config.d_ff, config.d_model, bias=False)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.down_proj(torch.nn.functional.silu(self.gate_proj(x))
                              * self.up_proj(x))


class Block(nn.Module):
    def __init__(self, config: BackboneConfig):
        super().__init__()
        self.attn_norm = nn.LayerNorm(config.d_model)
        self.attn = Attention(config)
        self.mlp_norm = nn.LayerNorm(config.d_model)
        self.mlp = GatedMLP(config)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = x + self.attn(self.attn_norm(x))
        return x + self.mlp(self.mlp_norm(x))


class TinyCausalLM(nn.Module):
    """Decoder-only LM; forward returns logits of shape (batch, seq, vocab)."""

    def __init__(self, config: BackboneConfig = BackboneConfig()):
        super().__init__()
        self.config = config
        self.embed = nn.Embedding(config.vocab_size, config.d_model)
        self.positions = nn.Embedding(config.max_position, config.d_model)
        self.blocks = nn.ModuleList(Block(config) for _ in range(config.n_layers))
        self.final_norm = nn.LayerNorm(config.d_model)
        self.lm_head = nn.Linear(config.d_model, config.vocab_size, bias=False)

    def forward(self, input_ids: torch.Tensor) -> torch.Tensor:
        if input_ids.size(1) > self.config.max_position:
            raise ValidationError(
                f"sequence length {input_ids.size(1)} exceeds "
                f"max_position {self.config.max_position}"
            )
        pos = torch.arange(input_ids.size(1), device=input_ids.device)
        x = self.embed(input_ids) + self.positions(pos)
        for block in self.blocks:
            x = block(x)
        return self.lm_head(self.final_norm(x))


def parameter_checksums(model: nn.Module) -> dict[str, str]:
    """SHA-256 per parameter tensor, for freeze-contract verification."""
    return {
        name: hashlib.sha256(
            param.detach().cpu().contiguous().numpy().tobytes()
        ).hexdigest()
        for name, param in model.named_parameters()
    }
