import pytest

from gradcut import maxflow


@pytest.fixture(scope="session", autouse=True)
def _jit_warm():
    # pay the JIT cost once, outside any timed assertions
    maxflow.warmup()
