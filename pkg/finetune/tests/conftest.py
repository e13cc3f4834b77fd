import sys
from pathlib import Path

import pytest
import torch

# src/ must precede the repo root on sys.path: the subproject directory is
# itself named "finetune" and would otherwise shadow the package.
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))
sys.path.insert(0, str(Path(__file__).parent))

from toys import PAIRS, tiny_adapter_config, tiny_backbone_config  # noqa: E402

from fable_finetune.backbone import TinyCausalLM
from fable_finetune.data import ByteTokenizer, prepare_examples
from fable_finetune.lora import inject_adapters


@pytest.fixture
def examples():
    tokenizer = ByteTokenizer()
    return prepare_examples(PAIRS, tokenizer, max_length=256)


@pytest.fixture
def adapted_model():
    torch.manual_seed(0)
    model = TinyCausalLM(tiny_backbone_config())
    return inject_adapters(model, tiny_adapter_config())
