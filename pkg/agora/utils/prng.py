"""Seeded randomness for every draw the engine makes.

All selection goes through splitmix64 and a partial Fisher-Yates shuffle so that any
implementation fed the same seed reproduces the same juries and panels bit for bit. Each module
draws from its own named sub-stream so that installing a module never perturbs another's draws.
"""
from typing import List, Sequence, TypeVar

from agora.utils.hashing import fnv1a64

T = TypeVar("T")

_U64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


class SplitMix64:
    """splitmix64 generator with an explicit, serializable state."""

    def __init__(self, state: int) -> None:
        self.state = state & _U64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & _U64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _U64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _U64
        return z ^ (z >> 31)

    def below(self, bound: int) -> int:
        """Uniform integer in [0, bound) by rejection of the biased low range."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        threshold = ((1 << 64) - bound) % bound
        while True:
            r = self.next_u64()
            if r >= threshold:
                return r % bound


def substream_seed(seed: int, name: str) -> int:
    """Initial state of the named sub-stream of an Instance seed."""
    return SplitMix64(seed ^ fnv1a64(name.encode("utf-8"))).next_u64()


def partial_fisher_yates(items: Sequence[T], k: int, rng: SplitMix64) -> List[T]:
    """Draw k items without replacement; the result is in selection order."""
    pool = list(items)
    if k < 0 or k > len(pool):
        raise ValueError(f"cannot draw {k} from {len(pool)}")
    n = len(pool)
    for i in range(k):
        j = i + rng.below(n - i)
        pool[i], pool[j] = pool[j], pool[i]
    return pool[:k]
