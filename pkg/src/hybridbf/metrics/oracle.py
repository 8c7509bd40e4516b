"""Noise-free exhaustive search over the full product codebook B(M_ap) x B(M_ue)."""

import numpy as np

from ..types import OracleSolution


def selection_objective(H: np.ndarray, p: np.ndarray, g: np.ndarray) -> float:
    """Sum over the held subcarriers of |g^H H[k] p|^2."""
    return float(np.sum(np.abs(np.einsum("i,kij,j->k", g.conj(), H, p)) ** 2))


def objective_grid(H: np.ndarray, ap_base: np.ndarray, sta_base: np.ndarray) -> np.ndarray:
    """Objective for every (AP beam, STA beam) pair, shape (M_ap, M_ue)."""
    coeffs = sta_base.conj() @ H @ ap_base.T  # (n_k, M_ue, M_ap)
    return np.sum(np.abs(coeffs) ** 2, axis=0).T


def oracle_exhaustive(H: np.ndarray, ap_base: np.ndarray, sta_base: np.ndarray) -> OracleSolution:
    """
    Best pair for pilot-subcarrier matrices ``H`` (n_k, M_ue, M_ap).

    Ties go to the lowest AP index, then the lowest STA index.
    """
    grid = objective_grid(H, ap_base, sta_base)
    a, s = np.unravel_index(int(np.argmax(grid)), grid.shape)
    return OracleSolution(
        ap_beam_index=int(a) + 1,
        sta_beam_index=int(s) + 1,
        p_opt=ap_base[a],
        g_opt=sta_base[s],
        objective=float(grid[a, s]),
        pairs_evaluated=grid.size,
    )
