import random

import pytest
from hypothesis import HealthCheck, settings

from byitfl.field import PrimeField, next_prime

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# a 127-bit prime keeps big-int arithmetic realistic but quick
BIG = next_prime(2**127)


@pytest.fixture
def big_field():
    return PrimeField(BIG)


@pytest.fixture
def rng():
    return random.Random(1234)
