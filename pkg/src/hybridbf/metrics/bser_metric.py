import time
from typing import Sequence

from ..errors import PairingError
from ..types import IndexPair, MetricValue, RealizationOutcome


def bser(selected: Sequence[IndexPair], optimal: Sequence[IndexPair]) -> float:
    """Fraction of selections whose (AP, STA) pair differs from the oracle pair."""
    if len(selected) != len(optimal):
        raise PairingError(f"{len(selected)} selections paired with {len(optimal)} oracle results")
    if not selected:
        raise PairingError("no selections to compare")
    errors = sum(1 for a, b in zip(selected, optimal) if tuple(a) != tuple(b))
    return errors / len(selected)


class BserMetric:
    """Beam selection error rate over every (realization, user) selection."""

    name = "bser"

    def score(self, outcomes: Sequence[RealizationOutcome]) -> MetricValue:
        t0 = time.perf_counter()
        selected = [pair for o in outcomes for pair in o.selected]
        optimal = [pair for o in outcomes for pair in o.optimal]
        value = bser(selected, optimal) if selected else float("nan")
        latency_ms = int((time.perf_counter() - t0) * 1000)
        return MetricValue(self.name, value, latency_ms, len(selected))
