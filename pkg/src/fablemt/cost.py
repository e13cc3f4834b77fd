"""API / GPU cost model: per-token pricing with reasoning-token accounting,
scenario ranges, sensitivity sweeps, and cluster-rental arithmetic.

All money arithmetic is exact Decimal: the projected figures are exact
rational products and must reproduce to the cent. Pricing is loaded from a
user-editable TOML table; the packaged defaults reflect published rates at
the time of writing and will go stale -- treat them as defaults, not
constants. DeepL's per-character rate is modeled as a converted equivalent
per-million-token price in the same table.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

from .errors import ValidationError

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

MILLION = Decimal(1_000_000)
DEFAULT_CLUSTER_RATE = Decimal("10.80")

DEFAULT_SENSITIVITY_MULTIPLIERS = (Decimal("0.5"), Decimal("1.0"), Decimal("3.0"))


@dataclass(frozen=True)
class PricingEntry:
    model: str
    price_in: Decimal
    price_out: Decimal
    bills_reasoning_as_output: bool = False

    def __post_init__(self):
        if self.price_in < 0 or self.price_out < 0:
            raise ValidationError("prices must be non-negative")


@dataclass(frozen=True)
class CostScenario:
    n_items: int
    tokens_in_per_item: int
    tokens_out_per_item: int
    reasoning_multiplier: Decimal = Decimal(0)

    def __post_init__(self):
        if self.n_items < 0 or self.tokens_in_per_item < 0 or self.tokens_out_per_item < 0:
            raise ValidationError("scenario counts must be non-negative")
        if self.reasoning_multiplier < 0:
            raise ValidationError("reasoning_multiplier must be >= 0")


@dataclass(frozen=True)
class CostEstimate:
    total_dollars: Decimal
    tokens_in: int
    tokens_out_visible: int
    tokens_reasoning: Decimal
    input_dollars: Decimal
    output_dollars: Decimal

    def to_json_dict(self) -> dict:
        return {
            "total_dollars": str(self.total_dollars),
            "tokens_in": self.tokens_in,
            "tokens_out_visible": self.tokens_out_visible,
            "tokens_reasoning": str(self.tokens_reasoning),
            "input_dollars": str(self.input_dollars),
            "output_dollars": str(self.output_dollars),
        }


def estimate_cost(scenario: CostScenario, pricing: PricingEntry) -> CostEstimate:
    """Dollar projection for one token scenario under one pricing entry.

    Hidden reasoning tokens (multiplier x visible output) are billed at the
    output rate when the pricing entry says the provider does so.
    """
    tokens_in = scenario.n_items * scenario.tokens_in_per_item
    tokens_out = scenario.n_items * scenario.tokens_out_per_item
    if pricing.bills_reasoning_as_output:
        tokens_reasoning = scenario.reasoning_multiplier * tokens_out
    else:
        tokens_reasoning = Decimal(0)
    input_dollars = Decimal(tokens_in) / MILLION * pricing.price_in
    output_dollars = (tokens_out + tokens_reasoning) / MILLION * pricing.price_out
    return CostEstimate(
        total_dollars=input_dollars + output_dollars,
        tokens_in=tokens_in,
        tokens_out_visible=tokens_out,
        tokens_reasoning=tokens_reasoning,
        input_dollars=input_dollars,
        output_dollars=output_dollars,
    )


def range_estimate(pricing: PricingEntry, n_items: int,
                   low: tuple[int, int], mid: tuple[int, int], high: tuple[int, int],
                   multiplier: Decimal = Decimal(0)) -> tuple[CostEstimate, CostEstimate, CostEstimate]:
    """Low/mid/high estimates for three (in, out) per-item token scenarios."""
    if not (low[0] <= mid[0] <= high[0] and low[1] <= mid[1] <= high[1]):
        raise ValidationError(
            f"token scenarios must be ordered low <= mid <= high, got {low}/{mid}/{high}"
        )
    return tuple(
        estimate_cost(
            CostScenario(n_items, t_in, t_out, reasoning_multiplier=multiplier),
            pricing,
        )
        for t_in, t_out in (low, mid, high)
    )


def sensitivity_sweep(pricing: PricingEntry, n_items: int,
                      low: tuple[int, int], mid: tuple[int, int], high: tuple[int, int],
                      multipliers: Sequence[Decimal] = DEFAULT_SENSITIVITY_MULTIPLIERS,
                      ) -> dict[Decimal, tuple[CostEstimate, CostEstimate, CostEstimate]]:
    """One range_estimate row per reasoning multiplier."""
    if not multipliers:
        raise ValidationError("multipliers must be non-empty")
    return {
        m: range_estimate(pricing, n_items, low, mid, high, multiplier=m)
        for m in multipliers
    }


def rental_cost(cluster_hours, rate_per_cluster_hour: Decimal = DEFAULT_CLUSTER_RATE) -> Decimal:
    """GPU-cluster rental: rate x wall-clock cluster-hours."""
    hours = Decimal(str(cluster_hours))
    if hours < 0:
        raise ValidationError("cluster hours must be non-negative")
    return rate_per_cluster_hour * hours


def load_pricing(path=None) -> dict[str, PricingEntry]:
    """Load a pricing table from TOML; defaults to the packaged table.

    Schema: one table per model key with price_in / price_out (dollars per
    million tokens, number or string) and optional
    bills_reasoning_as_output (bool).
    """
    if path is None:
        data = tomllib.loads(
            resources.files("fablemt").joinpath("data/default_pricing.toml").read_text()
        )
    else:
        with Path(path).open("rb") as fh:
            data = tomllib.load(fh)
    table = {}
    for model, entry in data.items():
        if not isinstance(entry, Mapping):
            raise ValidationError(f"pricing entry {model!r} is not a table")
        try:
            table[model] = PricingEntry(
                model=model,
                price_in=Decimal(str(entry["price_in"])),
                price_out=Decimal(str(entry["price_out"])),
                bills_reasoning_as_output=bool(entry.get("bills_reasoning_as_output", False)),
            )
        except KeyError as exc:
            raise ValidationError(f"pricing entry {model!r} missing {exc}") from exc
    return table
