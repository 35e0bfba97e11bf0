import pytest

from unidim.rng import RngStream


@pytest.fixture
def stream():
    """Fresh deterministic stream per test, keyed by the test's own name."""

    def make(label="test"):
        return RngStream.from_seed(label)

    return make
