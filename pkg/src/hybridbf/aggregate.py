import logging
import time
from collections import defaultdict
from typing import Dict, Iterable, List, Sequence, Tuple

from .metrics.base import REGISTRY
from .types import MetricValue, RealizationOutcome, SummaryRow

logger = logging.getLogger(__name__)


def score_outcomes(outcomes: Sequence[RealizationOutcome]) -> Dict[str, MetricValue]:
    """Run every registered metric over the outcomes of one SNR point."""
    return {metric.name: metric.score(outcomes) for metric in REGISTRY}


def summarize(config_id: str, snr_db: float, outcomes: Sequence[RealizationOutcome]) -> Tuple[SummaryRow, int]:
    """One results row for one SNR point, plus the aggregation latency in ms."""
    t0 = time.perf_counter()
    results = score_outcomes(outcomes)
    nan = float("nan")
    row = SummaryRow(
        config_id=config_id,
        snr_db=float(snr_db),
        realizations=len(outcomes),
        bser=results["bser"].value if "bser" in results else nan,
        loss_db=results["loss_db"].value if "loss_db" in results else nan,
        sum_rate_hybrid=results["sum_rate_hybrid"].value if "sum_rate_hybrid" in results else nan,
        sum_rate_digital_bd=results["sum_rate_digital_bd"].value if "sum_rate_digital_bd" in results else nan,
        excluded_count=int(results["excluded_count"].value) if "excluded_count" in results else 0,
    )
    latency_ms = int((time.perf_counter() - t0) * 1000)
    for name, mv in results.items():
        logger.debug("snr=%.1f %s=%.6g samples=%d latency=%dms", snr_db, name, mv.value, mv.samples, mv.latency_ms)
    return row, latency_ms


def summarize_sweep(config_id: str, outcomes: Iterable[RealizationOutcome]) -> List[SummaryRow]:
    """Group outcomes by SNR (ascending) and summarize each group in realization order."""
    groups: Dict[float, List[RealizationOutcome]] = defaultdict(list)
    for o in outcomes:
        groups[o.snr_db].append(o)
    rows = []
    for snr in sorted(groups):
        ordered = sorted(groups[snr], key=lambda o: o.index)
        row, _ = summarize(config_id, snr, ordered)
        rows.append(row)
    return rows
