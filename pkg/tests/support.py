"""Shared helpers for the test suite: fixture corpus and config writers."""

import json
from pathlib import Path

from stubserver import StubServer

from fablemt.translate import EndpointConfig

FABLES = [
    "The fox praised the crow's voice and stole the cheese. Moral: beware of flatterers.",
    "A tortoise beat a hare by walking steadily. Moral: slow and steady wins the race.",
    "The ant stored food all summer while the grasshopper sang. Moral: prepare for hard times.",
    "A lion spared a mouse, and the mouse later freed the lion. Moral: kindness is repaid.",
    "The dog with a bone saw his reflection and lost both. Moral: greed loses all.",
    "A shepherd boy cried wolf too often and was not believed. Moral: liars are not trusted.",
    "The oak boasted to the reed, then broke in the storm. Moral: bend, do not break.",
    "Two travelers met a bear; one hid, one played dead. Moral: adversity tests friends.",
    "A crow dropped pebbles in a pitcher to raise the water. Moral: necessity is inventive.",
    "The wind and sun competed to strip a traveler's cloak. Moral: persuasion beats force.",
    "A fox called the grapes sour when he could not reach them. Moral: scorn hides failure.",
    "The frogs asked for a king and received a stork. Moral: be careful what you wish for.",
    "A miser buried gold and mourned a worthless stone. Moral: unused wealth is no wealth.",
    "The mice proposed belling the cat, but none would do it. Moral: easier said than done.",
    "A goose laid golden eggs until her owner cut her open. Moral: greed destroys its source.",
]


def write_fables_jsonl(path: Path, texts=None) -> Path:
    texts = FABLES if texts is None else texts
    with path.open("w", encoding="utf-8") as fh:
        for text in texts:
            fh.write(json.dumps({"fable": text}) + "\n")
    return path


def write_endpoint_toml(path: Path, base_url: str, model_name: str,
                        max_retries: int = 0, max_concurrency: int = 4) -> Path:
    path.write_text(
        f'base_url = "{base_url}"\n'
        f'model_name = "{model_name}"\n'
        f"max_retries = {max_retries}\n"
        f"max_concurrency = {max_concurrency}\n"
        "timeout = 10.0\n"
    )
    return path


def stub_endpoint(server: StubServer, model_name: str = "stub-model",
                  max_retries: int = 0, max_concurrency: int = 4) -> EndpointConfig:
    return EndpointConfig(
        base_url=server.url,
        model_name=model_name,
        timeout=10.0,
        max_retries=max_retries,
        max_concurrency=max_concurrency,
    )
