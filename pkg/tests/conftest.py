import pytest

from slicekit import ted


@pytest.fixture(scope="session", autouse=True)
def warm_ted_kernel():
    # JIT compilation must not pollute timed acceptance runs.
    ted.warmup()
