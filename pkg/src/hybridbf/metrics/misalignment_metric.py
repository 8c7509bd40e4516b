import logging
import time
from typing import Sequence, Tuple

import numpy as np

from ..errors import PairingError
from ..types import MetricValue, RealizationOutcome

logger = logging.getLogger(__name__)


def misalignment_losses_db(achieved: Sequence[float], optimal: Sequence[float]) -> Tuple[np.ndarray, int]:
    """
    Per-selection loss 10 log10(optimal / achieved) and the number of
    selections dropped because the achieved objective was zero.
    """
    if len(achieved) != len(optimal):
        raise PairingError(f"{len(achieved)} achieved objectives paired with {len(optimal)} optimal")
    a = np.asarray(achieved, dtype=float)
    o = np.asarray(optimal, dtype=float)
    valid = a > 0
    dropped = int(np.count_nonzero(~valid))
    if dropped:
        logger.warning("misalignment loss: %d selections with zero objective excluded", dropped)
    # oracle maximality; clip rounding noise below zero
    losses = np.maximum(10 * np.log10(o[valid] / a[valid]), 0.0)
    return losses, dropped


def misalignment_loss_db(achieved: Sequence[float], optimal: Sequence[float]) -> float:
    losses, _ = misalignment_losses_db(achieved, optimal)
    return float(np.mean(losses)) if losses.size else float("nan")


class MisalignmentMetric:
    name = "loss_db"

    def score(self, outcomes: Sequence[RealizationOutcome]) -> MetricValue:
        t0 = time.perf_counter()
        achieved = [v for o in outcomes for v in o.achieved_objective]
        optimal = [v for o in outcomes for v in o.optimal_objective]
        value = misalignment_loss_db(achieved, optimal) if achieved else float("nan")
        latency_ms = int((time.perf_counter() - t0) * 1000)
        return MetricValue(self.name, value, latency_ms, len(achieved))
