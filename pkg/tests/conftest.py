import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sandbox_stub import StubSandboxServer  # noqa: E402

from instructforge.prompts import PromptPool  # noqa: E402


@pytest.fixture(scope="session")
def pool() -> PromptPool:
    return PromptPool.load()


@pytest.fixture(scope="session")
def stub_sandbox():
    server = StubSandboxServer().start()
    yield server
    server.stop()


@pytest.fixture()
def fresh_stub_sandbox():
    server = StubSandboxServer().start()
    yield server
    server.stop()
