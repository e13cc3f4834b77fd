"""Shared helpers: fixture pairs, tiny model configs, corpus writer."""

import json
from pathlib import Path

from fable_finetune.backbone import BackboneConfig
from fable_finetune.lora import AdapterConfig

PAIRS = [
    ("The fox praised the crow's voice.", "Vulpea a lăudat vocea ciorii."),
    ("A slow tortoise beat the hare.", "O broască ţestoasă lentă a învins iepurele."),
    ("The ant saved food for winter.", "Furnica a păstrat hrană pentru iarnă."),
    ("A lion spared a tiny mouse.", "Un leu a cruţat un şoricel."),
    ("The wolf cried once too often.", "Lupul a strigat o dată prea des."),
    ("The oak broke; the reed bent.", "Stejarul s-a rupt; trestia s-a îndoit."),
    ("A dog dropped his bone for a shadow.", "Un câine şi-a scăpat osul pentru o umbră."),
    ("The wind lost to the quiet sun.", "Vântul a pierdut în faţa soarelui liniştit."),
]


def tiny_backbone_config() -> BackboneConfig:
    return BackboneConfig(d_model=16, n_heads=2, n_layers=2, d_ff=32,
                          max_position=256)


def tiny_adapter_config(**overrides) -> AdapterConfig:
    defaults = {"rank": 4, "alpha": 4.0, "dropout": 0.0}
    defaults.update(overrides)
    return AdapterConfig(**defaults)


def write_pairs_jsonl(path: Path, pairs=PAIRS) -> Path:
    with path.open("w", encoding="utf-8") as fh:
        for source, target in pairs:
            fh.write(json.dumps({
                "fable": source,
                "translated_fable": target,
                "pipeline_stage": "translation",
                "source_lang": "English",
                "target_lang": "Romanian",
                "prompt_hash": "0" * 64,
                "llm_name": "fixture",
                "translation_model": "fixture",
                "generation_timestamp": 1_700_000_000,
            }, ensure_ascii=False) + "\n")
    return path
