import random

import pytest
from hypothesis import settings

from stegotext.keys import SecretKey, serialize_input, setup

settings.register_profile("suite", deadline=None)
settings.load_profile("suite")


def seeded_key(seed: int) -> SecretKey:
    return setup(128, rng=random.Random(seed))


def mock_prf_factory(seed: int):
    """Input-keyed mock PRF: every distinct logical input gets one fresh
    uniform draw; repeated inputs return the cached value, as a real keyed
    function would."""
    rng = random.Random(seed)
    cache = {}
    calls = []

    def mock(_key, inp):
        k = serialize_input(inp)
        calls.append(inp)
        if k not in cache:
            cache[k] = rng.random()
        return cache[k]

    return mock, cache, calls


def matched_prefix(expected, got) -> int:
    if got is None:
        return 0
    n = 0
    for a, b in zip(expected, got):
        if a != b:
            break
        n += 1
    return n


@pytest.fixture
def key():
    return seeded_key(1)
