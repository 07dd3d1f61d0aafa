import numpy as np
import pytest

from hetsplit.allocator import UeLinkState


def random_states(rng: np.random.Generator, k: int) -> list[UeLinkState]:
    """Random allocation instance: p in [1e6,1e8], r in {0} u [1e5,1e8],
    l in [0,0.1] s, f = 4e6 bits."""
    states = []
    for ue in range(k):
        p = rng.uniform(1e6, 1e8)
        r = 0.0 if rng.random() < 0.25 else rng.uniform(1e5, 1e8)
        l = rng.uniform(0.0, 0.1)
        states.append(UeLinkState(ue, p, r, l, 4e6))
    return states


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
