"""Phase stopwatch used by the client protocol and the benchmark harness."""

from __future__ import annotations

import time
from collections import defaultdict
from contextlib import contextmanager


class PhaseClock:
    """Accumulates monotonic wall time per named phase, in seconds."""

    def __init__(self):
        self.totals: dict[str, float] = defaultdict(float)

    @contextmanager
    def phase(self, name: str):
        start = time.perf_counter()
        try:
            yield
        finally:
            self.totals[name] += time.perf_counter() - start

    def micros(self, name: str) -> int:
        return round(self.totals.get(name, 0.0) * 1e6)

    def total(self) -> float:
        return sum(self.totals.values())
