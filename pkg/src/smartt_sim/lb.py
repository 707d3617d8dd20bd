"""Per-flow entropy selection for packet spraying.

* ``reps``: reuse entropies whose last feedback came back clean, retire the
  ones that came back ECN-marked or trimmed, and fall back to a cycling
  cursor over the whole entropy domain when nothing is recyclable.
* ``oblivious``: a uniform random entropy per packet.
* ``single``: one fixed entropy per flow (classic ECMP hashing).
"""

from __future__ import annotations

import random
from collections import Counter, deque

LB_MODES = ("reps", "oblivious", "single")


class EntropyPool:
    mode = "base"

    def __init__(self, domain_size: int, rng: random.Random):
        if domain_size < 1:
            raise ValueError("entropy domain must be non-empty")
        self.domain_size = domain_size
        self.rng = rng
        self.usage: Counter = Counter()

    def next_entropy(self) -> int:
        e = self._pick()
        self.usage[e] += 1
        return e

    def _pick(self) -> int:
        raise NotImplementedError

    def on_feedback(self, entropy: int, congested: bool) -> None:
        """Default policies ignore feedback."""


class RepsPool(EntropyPool):
    mode = "reps"

    def __init__(self, domain_size: int, rng: random.Random):
        super().__init__(domain_size, rng)
        self.recycled: deque[int] = deque()
        # per-flow offset keeps concurrent flows off the same first path
        self.fresh_cursor = rng.randrange(domain_size)

    def _pick(self) -> int:
        if self.recycled:
            return self.recycled.popleft()
        e = self.fresh_cursor
        self.fresh_cursor = (self.fresh_cursor + 1) % self.domain_size
        return e

    def on_feedback(self, entropy: int, congested: bool) -> None:
        if not congested and 0 <= entropy < self.domain_size:
            self.recycled.append(entropy)


class ObliviousPool(EntropyPool):
    mode = "oblivious"

    def _pick(self) -> int:
        return self.rng.randrange(self.domain_size)


class SinglePathPool(EntropyPool):
    mode = "single"

    def __init__(self, domain_size: int, rng: random.Random):
        super().__init__(domain_size, rng)
        self.entropy = rng.randrange(domain_size)

    def _pick(self) -> int:
        return self.entropy


def make_pool(mode: str, domain_size: int, rng: random.Random) -> EntropyPool:
    try:
        cls = {"reps": RepsPool, "oblivious": ObliviousPool, "single": SinglePathPool}[mode]
    except KeyError:
        raise ValueError(f"unknown load balancer {mode!r}; expected one of {LB_MODES}") from None
    return cls(domain_size, rng)
