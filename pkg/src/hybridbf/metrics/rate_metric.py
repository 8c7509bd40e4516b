"""Achievable sum-rate with the true channel and a given hybrid precoder."""

import logging
import time
from typing import Optional, Sequence

import numpy as np

from .. import settings
from ..errors import ContractError
from ..signal import equivalent_channel
from ..types import MetricValue, RateReport, RealizationOutcome

logger = logging.getLogger(__name__)


def achievable_sum_rate(
    H_users: np.ndarray,
    g_users: np.ndarray,
    P_an: np.ndarray,
    P_di: np.ndarray,
    rho: float,
    noise_variance: float,
    K: Optional[int] = None,
) -> RateReport:
    """
    (1/K) sum_k sum_u log2(1 + eta_u / (eta_u_inter + sigma^2)).

    ``H_users`` is (U, n_k, M_ue, M_ap) and ``P_di`` is (n_k, N_rf, U).
    Every stream carries rho/K per subcarrier before the precoder. A
    realization whose analog matrix has rank below U is reported as
    excluded with zero rates.
    """
    U, n_k = H_users.shape[:2]
    K = n_k if K is None else K
    frob = np.linalg.norm(np.einsum("mn,knu->kmu", P_an, P_di), axis=(1, 2))
    if np.any(np.abs(frob - 1) > settings.NORM_TOL):
        raise ContractError(f"||P_an P_di[k]||_F must be 1, got range [{frob.min():.6g}, {frob.max():.6g}]")
    if np.linalg.matrix_rank(P_an, tol=settings.RANK_RTOL * np.linalg.norm(P_an, 2)) < U:
        logger.warning("analog matrix rank below %d users; realization excluded", U)
        return RateReport(np.zeros(U), 0.0, excluded=1)

    h_eq = equivalent_channel(H_users, g_users, P_an)  # (U, n_k, N_rf)
    gains = (rho / K) * np.abs(np.einsum("ukn,knv->ukv", h_eq, P_di)) ** 2  # (U, n_k, U)
    own = np.einsum("uku->uk", gains)
    inter = gains.sum(axis=2) - own
    per_subcarrier = np.log2(1 + own / (inter + noise_variance))
    per_user = per_subcarrier.sum(axis=1) / n_k
    return RateReport(per_user, float(per_user.sum()))


class HybridRateMetric:
    name = "sum_rate_hybrid"
    field = "sum_rate_hybrid"

    def score(self, outcomes: Sequence[RealizationOutcome]) -> MetricValue:
        t0 = time.perf_counter()
        values = [getattr(o, self.field) for o in outcomes if not o.excluded and getattr(o, self.field) is not None]
        value = float(np.mean(values)) if values else float("nan")
        latency_ms = int((time.perf_counter() - t0) * 1000)
        return MetricValue(self.name, value, latency_ms, len(values))


class DigitalBdRateMetric(HybridRateMetric):
    name = "sum_rate_digital_bd"
    field = "sum_rate_digital_bd"


class ExcludedMetric:
    name = "excluded_count"

    def score(self, outcomes: Sequence[RealizationOutcome]) -> MetricValue:
        t0 = time.perf_counter()
        value = sum(1 for o in outcomes if o.excluded)
        latency_ms = int((time.perf_counter() - t0) * 1000)
        return MetricValue(self.name, float(value), latency_ms, len(outcomes))
