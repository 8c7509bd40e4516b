"""Horizontal SNR gap between a hybrid rate curve and a baseline curve."""

import logging
from typing import Sequence

import numpy as np

from ..errors import PairingError
from ..types import GapReport

logger = logging.getLogger(__name__)


def snr_sweep_gap_db(
    snr_db: Sequence[float],
    hybrid_rates: Sequence[float],
    baseline_rates: Sequence[float],
) -> GapReport:
    """
    Mean dB shift the baseline saves to reach the hybrid rate, over the top
    half of the SNR grid.

    For each grid point the baseline curve is inverted by linear
    interpolation in dB. Points whose hybrid rate lies outside the
    baseline's range are skipped and reported in ``diagnostic``.
    """
    snr = np.asarray(snr_db, dtype=float)
    hyb = np.asarray(hybrid_rates, dtype=float)
    base = np.asarray(baseline_rates, dtype=float)
    if not (snr.shape == hyb.shape == base.shape) or snr.size < 2:
        raise PairingError("SNR grid and rate curves must share a length >= 2")
    if np.any(np.diff(base) <= 0):
        raise PairingError("baseline rates must increase strictly over the SNR grid")

    top = np.arange(snr.size // 2, snr.size)
    inside = (hyb[top] >= base[0]) & (hyb[top] <= base[-1])
    used = top[inside]
    diagnostic = ""
    if used.size < top.size:
        diagnostic = f"partial gap: {top.size - used.size} of {top.size} points outside the baseline range"
        logger.warning(diagnostic)
    if used.size == 0:
        return GapReport(float("nan"), 0, int(top.size), diagnostic or "no overlapping rate range")
    matched_snr = np.interp(hyb[used], base, snr)
    gap = float(np.mean(snr[used] - matched_snr))
    return GapReport(gap, int(used.size), int(top.size), diagnostic)
