"""
Per-subcarrier baseband signal models and ML coefficient estimation.

Shapes: channel stacks ``H`` are (n_k, M_ue, M_ap) for one user, training
sequences are (n_k, T), analog matrices are (M_ap, N_rf).
"""

from __future__ import annotations

import logging
from typing import Optional

import numpy as np

from . import settings
from .errors import ContractError, EstimationError, ShapeError
from .types import EstimationPath, LinkBudget, TrainingSignal

logger = logging.getLogger(__name__)


def complex_noise(rng: np.random.Generator, shape, variance: float) -> np.ndarray:
    """Circularly symmetric CN(0, variance) samples."""
    if variance == 0:
        return np.zeros(shape, dtype=complex)
    scale = np.sqrt(variance / 2)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def pilot_indices(K: int, K_tx: int) -> np.ndarray:
    """K_tx evenly spaced 1-based pilots including both band edges."""
    if not 1 <= K_tx <= K:
        raise ShapeError(f"pilot count must lie in 1..{K}, got {K_tx}")
    if K_tx == 1:
        return np.array([1])
    i = np.arange(K_tx)
    # round half up, not numpy's round-half-even
    return np.floor(i * (K - 1) / (K_tx - 1) + 0.5).astype(int) + 1


def gen_training(rng: np.random.Generator, pilots, T: int, K: int) -> TrainingSignal:
    """Unit-modulus QPSK training sequences on every pilot subcarrier."""
    if T < 1:
        raise ShapeError(f"training length must be >= 1, got {T}")
    pilots = np.asarray(pilots, dtype=int)
    symbols = rng.integers(0, 4, size=(len(pilots), T))
    x = np.exp(1j * (np.pi / 4 + np.pi / 2 * symbols))
    return TrainingSignal(x, pilots, K)


def _as_matrix(P: np.ndarray) -> np.ndarray:
    P = np.asarray(P)
    return P[:, None] if P.ndim == 1 else P


def check_analog_matrix(P_an: np.ndarray) -> None:
    N_rf = P_an.shape[1]
    col_power = np.sum(np.abs(P_an) ** 2, axis=0)
    if np.any(np.abs(col_power - 1 / N_rf) > settings.NORM_TOL):
        raise ContractError(
            f"analog matrix columns must have squared norm 1/N_rf={1 / N_rf:.6g}, got {col_power}"
        )


def check_sta_beamformer(g: np.ndarray) -> None:
    power = float(np.sum(np.abs(g) ** 2))
    if power > 1 + settings.NORM_TOL:
        raise ContractError(f"STA beamformer squared norm must be <= 1, got {power:.6g}")


def uplink_coefficient(p: np.ndarray, g: np.ndarray, H: np.ndarray, rho: float, K: int) -> np.ndarray:
    """
    v[k] = sqrt(rho/K) p^T H^T[k] g*  (equivalently sqrt(rho/K) g^H H[k] p).

    ``p`` may be a vector (result shape (n_k,)) or an (M_ap, N_rf) matrix
    (result shape (n_k, N_rf)).
    """
    H = np.asarray(H)
    if H.ndim == 2:
        H = H[None]
    if H.shape[1] != g.shape[0] or H.shape[2] != np.shape(p)[0]:
        raise ShapeError(f"channel {H.shape[1:]} incompatible with g {g.shape} and p {np.shape(p)}")
    return np.sqrt(rho / K) * np.einsum("i,kij,j...->k...", g.conj(), H, p)


def downlink_coefficient(g: np.ndarray, H: np.ndarray, P_an: np.ndarray, rho: float, K: int) -> np.ndarray:
    """w[k] = sqrt(rho / (K N_rf)) g^H H[k] P_an 1."""
    P_an = _as_matrix(P_an)
    N_rf = P_an.shape[1]
    return uplink_coefficient(P_an.sum(axis=1), g, H, rho, K) / np.sqrt(N_rf)


def uplink_receive(
    P_an: np.ndarray,
    g: np.ndarray,
    H: np.ndarray,
    training: TrainingSignal,
    budget: LinkBudget,
    rng: np.random.Generator,
) -> np.ndarray:
    """Per-chain received sequences y_n[k], shape (n_k, N_rf, T)."""
    P_an = _as_matrix(P_an)
    check_analog_matrix(P_an)
    check_sta_beamformer(g)
    v = uplink_coefficient(P_an, g, H, budget.total_power, training.num_subcarriers)
    x = training.sequences
    if v.shape[0] != x.shape[0]:
        raise ShapeError(f"{v.shape[0]} channel subcarriers but {x.shape[0]} training sequences")
    N_rf = P_an.shape[1]
    y = v[:, :, None] * x[:, None, :]
    return y + complex_noise(rng, y.shape, budget.noise_variance / N_rf)


def downlink_receive(
    g: np.ndarray,
    H: np.ndarray,
    P_an: np.ndarray,
    training: TrainingSignal,
    budget: LinkBudget,
    rng: np.random.Generator,
) -> np.ndarray:
    """STA received sequence y[k], shape (n_k, T)."""
    P_an = _as_matrix(P_an)
    check_analog_matrix(P_an)
    check_sta_beamformer(g)
    w = downlink_coefficient(g, H, P_an, budget.total_power, training.num_subcarriers)
    x = training.sequences
    if w.shape[0] != x.shape[0]:
        raise ShapeError(f"{w.shape[0]} channel subcarriers but {x.shape[0]} training sequences")
    y = w[:, None] * x
    return y + complex_noise(rng, y.shape, budget.noise_variance)


def ml_estimate(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    """ML coefficient y x^H / ||x||^2 along the last axis."""
    energy = np.sum(np.abs(x) ** 2, axis=-1)
    if np.any(energy == 0):
        raise EstimationError("training sequence has zero energy")
    return np.sum(y * x.conj(), axis=-1) / energy


def estimate_uplink(
    P_an: np.ndarray,
    g: np.ndarray,
    H: np.ndarray,
    training: TrainingSignal,
    budget: LinkBudget,
    rng: np.random.Generator,
    path: EstimationPath = "waveform",
) -> np.ndarray:
    """
    Per-chain estimates v_hat_n[k], shape (n_k, N_rf).

    ``projected`` draws the post-projection noise CN(0, sigma^2 / (N_rf T))
    directly; it has the same statistics as ``waveform`` with unit-modulus
    training but skips the T-sample sequences.
    """
    if path == "waveform":
        y = uplink_receive(P_an, g, H, training, budget, rng)
        return ml_estimate(y, training.sequences[:, None, :])
    P_an = _as_matrix(P_an)
    check_analog_matrix(P_an)
    check_sta_beamformer(g)
    v = uplink_coefficient(P_an, g, H, budget.total_power, training.num_subcarriers)
    var = budget.noise_variance / (P_an.shape[1] * training.length)
    return v + complex_noise(rng, v.shape, var)


def estimate_downlink(
    g: np.ndarray,
    H: np.ndarray,
    P_an: np.ndarray,
    training: TrainingSignal,
    budget: LinkBudget,
    rng: np.random.Generator,
    path: EstimationPath = "waveform",
) -> np.ndarray:
    """STA-side estimates w_hat[k], shape (n_k,)."""
    if path == "waveform":
        y = downlink_receive(g, H, P_an, training, budget, rng)
        return ml_estimate(y, training.sequences)
    P_an = _as_matrix(P_an)
    check_analog_matrix(P_an)
    check_sta_beamformer(g)
    w = downlink_coefficient(g, H, P_an, budget.total_power, training.num_subcarriers)
    return w + complex_noise(rng, w.shape, budget.noise_variance / training.length)


def sweep_uplink(
    P_stack: np.ndarray,
    G_stack: np.ndarray,
    H: np.ndarray,
    training: TrainingSignal,
    budget: LinkBudget,
    rng: np.random.Generator,
    path: EstimationPath = "waveform",
) -> np.ndarray:
    """
    Uplink estimates for every (AP matrix, STA beamformer) pair.

    ``P_stack`` is (A, M_ap, N_rf), ``G_stack`` is (S, M_ue); the result
    v_hat[a, s, n, k] has shape (A, S, N_rf, n_k). Each pair is one
    training transmission with independent noise.
    """
    for P in P_stack:
        check_analog_matrix(P)
    for g in G_stack:
        check_sta_beamformer(g)
    if H.shape[0] != training.sequences.shape[0]:
        raise ShapeError(f"{H.shape[0]} channel subcarriers but {training.sequences.shape[0]} training sequences")
    N_rf = P_stack.shape[2]
    scale = np.sqrt(budget.total_power / training.num_subcarriers)
    v = scale * np.einsum("si,kij,ajn->asnk", G_stack.conj(), H, P_stack)
    if path == "waveform":
        x = training.sequences
        y = v[..., None] * x + complex_noise(rng, v.shape + (x.shape[1],), budget.noise_variance / N_rf)
        return ml_estimate(y, x)
    return v + complex_noise(rng, v.shape, budget.noise_variance / (N_rf * training.length))


def sweep_downlink(
    G_stack: np.ndarray,
    H: np.ndarray,
    P_an: np.ndarray,
    training: TrainingSignal,
    budget: LinkBudget,
    rng: np.random.Generator,
    path: EstimationPath = "waveform",
) -> np.ndarray:
    """Downlink estimates w_hat[s, k] for every STA beamformer in ``G_stack``."""
    P_an = _as_matrix(P_an)
    check_analog_matrix(P_an)
    for g in G_stack:
        check_sta_beamformer(g)
    if H.shape[0] != training.sequences.shape[0]:
        raise ShapeError(f"{H.shape[0]} channel subcarriers but {training.sequences.shape[0]} training sequences")
    N_rf = P_an.shape[1]
    scale = np.sqrt(budget.total_power / (training.num_subcarriers * N_rf))
    w = scale * np.einsum("si,kij,j->sk", G_stack.conj(), H, P_an.sum(axis=1))
    if path == "waveform":
        x = training.sequences
        y = w[..., None] * x + complex_noise(rng, w.shape + (x.shape[1],), budget.noise_variance)
        return ml_estimate(y, x)
    return w + complex_noise(rng, w.shape, budget.noise_variance / training.length)


def equivalent_channel(H_users: np.ndarray, g_users: np.ndarray, P_an: np.ndarray) -> np.ndarray:
    """h_eq,u[k] = g_u^H H_u[k] P_an, shape (U, n_k, N_rf)."""
    return np.einsum("ui,ukij,jn->ukn", g_users.conj(), H_users, _as_matrix(P_an))


def multiuser_downlink_signal(
    H_users: np.ndarray,
    g_users: np.ndarray,
    P_an: np.ndarray,
    P_di: np.ndarray,
    s: np.ndarray,
    budget: LinkBudget,
    rng: np.random.Generator,
    powers: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    Broadcast downlink y_u[k] = h_eq,u[k] P_di[k] s[k] + z_u[k].

    ``P_di`` is (n_k, N_rf, U) and ``s`` is (n_k, U) or (n_k, U, T); the
    result is (U, n_k) or (U, n_k, T).
    """
    P_an = _as_matrix(P_an)
    frob = np.linalg.norm(np.einsum("mn,knu->kmu", P_an, P_di), axis=(1, 2))
    if np.any(np.abs(frob - 1) > settings.NORM_TOL):
        raise ContractError(f"||P_an P_di[k]||_F must be 1, got range [{frob.min():.6g}, {frob.max():.6g}]")
    if powers is not None and np.sum(powers) > budget.total_power * (1 + settings.NORM_TOL):
        raise ContractError(f"per-user powers sum to {np.sum(powers):.6g} > rho={budget.total_power}")
    h_eq = equivalent_channel(H_users, g_users, P_an)
    if s.ndim == 2:
        y = np.einsum("ukn,knv,kv->uk", h_eq, P_di, s)
    else:
        y = np.einsum("ukn,knv,kvt->ukt", h_eq, P_di, s)
    return y + complex_noise(rng, y.shape, budget.noise_variance)
