import hashlib

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def make_rng(*key):
    """Deterministic generator keyed by a mixed tuple, so tests never share
    streams; strings are hashed down to ints for SeedSequence."""
    ints = [
        k if isinstance(k, int)
        else int.from_bytes(hashlib.sha256(str(k).encode()).digest()[:8], "big")
        for k in key
    ]
    return np.random.default_rng(np.random.SeedSequence(ints))
