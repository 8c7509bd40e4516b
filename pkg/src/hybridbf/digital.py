"""
Digital stage: equivalent-channel estimation, block-diagonalization (BD)
precoding for the hybrid AP, and the fully-digital reference baselines.

Power convention: data symbols carry rho/K per subcarrier and every user
gets an equal share, so each precoder column u satisfies
||P_an P_di[:, u]||^2 = 1/U and ||P_an P_di[k]||_F = 1.
"""

from __future__ import annotations

import logging
from typing import Optional, Sequence

import numpy as np

from . import settings
from .errors import InfeasibleError, ShapeError
from .signal import estimate_uplink
from .types import (
    ChannelTensor,
    DigitalPrecoder,
    EquivalentChannel,
    EstimationPath,
    LinkBudget,
    TrainingSignal,
)

logger = logging.getLogger(__name__)


def null_space_projectors(A: np.ndarray, rtol: Optional[float] = None) -> np.ndarray:
    """
    Orthogonal projectors onto the null space of each A[k].

    ``A`` is (n_k, r, N); the result is (n_k, N, N). Singular values below
    ``rtol * sigma_max`` count as zero.
    """
    rtol = settings.RANK_RTOL if rtol is None else rtol
    n_k, r, N = A.shape
    eye = np.broadcast_to(np.eye(N, dtype=complex), (n_k, N, N))
    if r == 0:
        return eye.copy()
    _, s, Vh = np.linalg.svd(A, full_matrices=True)
    keep = np.zeros((n_k, N), dtype=bool)
    smax = s[:, :1]
    keep[:, : s.shape[1]] = s > rtol * np.maximum(smax, np.finfo(float).tiny)
    row_space = np.einsum("kin,ki,kim->knm", Vh.conj(), keep, Vh)
    return eye - row_space


def estimate_equivalent_channels(
    channel: ChannelTensor,
    P_an: np.ndarray,
    g_users: np.ndarray,
    training: TrainingSignal,
    budget: LinkBudget,
    rng: np.random.Generator,
    path: EstimationPath = "waveform",
) -> EquivalentChannel:
    """
    One uplink training per user with its selected STA beam; rows are the
    per-chain ML estimates on the pilots (scaled by sqrt(rho/K)).
    """
    pilots = channel.restrict(training.pilots)
    rows = np.stack(
        [
            estimate_uplink(P_an, g_users[u], pilots.matrices[u], training, budget, rng, path)
            for u in range(pilots.num_users)
        ]
    )
    logger.debug("equivalent channels estimated for %d users (%d transmissions)", len(rows), len(rows))
    return EquivalentChannel(rows, np.asarray(training.pilots))


def expand_to_subcarriers(eq: EquivalentChannel, subcarriers: Sequence[int]) -> EquivalentChannel:
    """Nearest-pilot hold onto ``subcarriers``; equidistant ties go to the lower pilot."""
    targets = np.asarray(subcarriers, dtype=int)
    pilots = np.asarray(eq.subcarriers, dtype=int)
    dist = np.abs(targets[:, None] - pilots[None, :])
    nearest = np.argmin(dist, axis=1)  # first minimum is the lower pilot
    return EquivalentChannel(eq.rows[:, nearest], targets)


def exact_equivalent_channels(
    channel: ChannelTensor, P_an: np.ndarray, g_users: np.ndarray, rho: float
) -> EquivalentChannel:
    """Noise-free sqrt(rho/K) g_u^H H_u[k] P_an on every subcarrier held by ``channel``."""
    scale = np.sqrt(rho / channel.num_subcarriers)
    rows = scale * np.einsum("ui,ukij,jn->ukn", g_users.conj(), channel.matrices, P_an)
    return EquivalentChannel(rows, np.asarray(channel.subcarriers))


def bd_precoder(eq: EquivalentChannel, P_an: np.ndarray, rho: float = 1.0) -> DigitalPrecoder:
    """
    Zero-interference precoder P_di[k] of shape (N_rf, U) for each subcarrier.

    Column u is the matched filter of user u inside the null space of the
    other users' rows, scaled so that ||P_an P_di[:, u]||^2 = 1/U.
    """
    rows = eq.rows
    U, n_k, N_rf = rows.shape
    if P_an.shape[1] != N_rf:
        raise ShapeError(f"equivalent rows have {N_rf} entries but P_an has {P_an.shape[1]} columns")
    if U > N_rf:
        raise InfeasibleError(f"{U} users exceed {N_rf} RF chains")

    P_di = np.empty((n_k, N_rf, U), dtype=complex)
    for u in range(U):
        others = np.delete(rows, u, axis=0).transpose(1, 0, 2)  # (n_k, U-1, N_rf)
        proj = null_space_projectors(others)
        h = rows[u]  # (n_k, N_rf)
        c = np.einsum("knm,km->kn", proj, h.conj())
        gain = np.linalg.norm(c, axis=1)
        ref = np.linalg.norm(h, axis=1)
        bad = gain <= settings.RANK_RTOL * np.maximum(ref, np.finfo(float).tiny)
        if np.any(bad):
            k = int(np.flatnonzero(bad)[0])
            raise InfeasibleError(
                f"user {u + 1} has no interference-free direction at subcarrier {int(eq.subcarriers[k])}"
            )
        c = c / gain[:, None]
        col_power = np.sum(np.abs(P_an @ c.T) ** 2, axis=0)  # ||P_an c[k]||^2 per k
        P_di[:, :, u] = c / np.sqrt(col_power * U)[:, None]
    powers = np.full(U, rho / U)
    return DigitalPrecoder(P_di, powers)


def genie_precoder(
    channel: ChannelTensor, P_an: np.ndarray, g_users: np.ndarray, rho: float = 1.0
) -> DigitalPrecoder:
    """BD precoder built from the true equivalent channel on every subcarrier."""
    return bd_precoder(exact_equivalent_channels(channel, P_an, g_users, rho), P_an, rho)


def bd_baseline_gains(H_users: np.ndarray) -> np.ndarray:
    """
    Per-user per-subcarrier gains of fully-digital coordinated BD, shape (U, n_k).

    Every STA receives with the dominant left singular vector of its own
    H_u[k], so user u is seen by the AP through the single row
    r_u[k] = sigma_1 v_1^H. The transmit vector of user u is the matched
    filter of r_u inside the null space of the other users' rows, giving
    ||r_u Pi_u||^2 with zero interference. With one user this is sigma_1^2.
    """
    U, n_k, M_ue, M_ap = H_users.shape
    if U > M_ap:
        raise InfeasibleError(f"{U} single-stream users exceed {M_ap} AP antennas")
    _, s, Vh = np.linalg.svd(H_users, full_matrices=False)
    rows = s[..., :1] * Vh[..., 0, :]  # (U, n_k, M_ap)
    gains = np.empty((U, n_k))
    for u in range(U):
        others = np.delete(rows, u, axis=0).transpose(1, 0, 2)
        proj = null_space_projectors(others)
        gains[u] = np.linalg.norm(np.einsum("knm,km->kn", proj, rows[u].conj()), axis=1) ** 2
    return gains


def rates_from_gains(gains: np.ndarray, rho: float, K: int, noise_variance: float) -> np.ndarray:
    """Per-user per-subcarrier log2(1 + (rho / (K U)) g / sigma^2)."""
    U = gains.shape[0]
    return np.log2(1 + (rho / (K * U)) * gains / noise_variance)


def fully_digital_bd_baseline(
    H_users: np.ndarray, rho: float, noise_variance: float, K: Optional[int] = None
) -> np.ndarray:
    """Per-user per-subcarrier rates (U, n_k) of ideal fully-digital BD with perfect CSI."""
    K = H_users.shape[1] if K is None else K
    return rates_from_gains(bd_baseline_gains(H_users), rho, K, noise_variance)


def single_user_svd_baseline(
    H: np.ndarray, rho: float, noise_variance: float, K: Optional[int] = None
) -> float:
    """Average rate of unconstrained single-user eigenbeamforming, equal power per subcarrier."""
    H = np.asarray(H)
    if H.ndim == 2:
        H = H[None]
    smax = np.linalg.svd(H, compute_uv=False)[:, 0]
    K = H.shape[0] if K is None else K
    return float(np.mean(np.log2(1 + rho / (K * noise_variance) * smax**2)))
