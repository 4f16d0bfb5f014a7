"""Counter-based random streams.

Every stochastic unit of work (a bootstrap replicate, a simulation
replication, a Monte-Carlo chunk) gets its own Philox generator keyed by the
user seed and the unit's index, so results never depend on how the work is
split across workers or in which order it runs.
"""

import secrets

import numpy as np

_MASK64 = (1 << 64) - 1

# stream tags keep different consumers of the same seed apart
BOOTSTRAP = 1
SIMULATION = 2
MONTE_CARLO = 3
TEST_SET = 4
OPTIMIZER = 5


def stream(seed: int, tag: int, index: int = 0, sub: int = 0) -> np.random.Generator:
    """Generator for unit ``index`` of stream ``tag`` under ``seed``."""
    if seed < 0 or seed > _MASK64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    high = ((tag & 0xFFFF) << 48) | ((sub & 0xFFFF) << 32) | (index & 0xFFFFFFFF)
    return np.random.Generator(np.random.Philox(key=(high << 64) | seed))


def fresh_seed() -> int:
    """A random 64-bit seed, for callers that did not supply one."""
    return secrets.randbits(64)
