import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from stubserver import StubServer, constant_judge_behavior, echo_behavior  # noqa: E402
from support import write_fables_jsonl  # noqa: E402


@pytest.fixture
def echo_server():
    server = StubServer(echo_behavior)
    yield server
    server.close()


@pytest.fixture
def judge_server():
    server = StubServer(constant_judge_behavior())
    yield server
    server.close()


@pytest.fixture
def fables_file(tmp_path):
    return write_fables_jsonl(tmp_path / "fables.jsonl")
