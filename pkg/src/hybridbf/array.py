"""
Uniform linear array model: element pattern, frequency-dependent response,
mutual coupling and radiation-pattern synthesis.

Beamformers are frequency independent (phase-shifter settings). Beam squint
comes entirely from the f_k/f0 factor in the array response. The common
group-delay term of the phase shifters is not modelled.
"""

from __future__ import annotations

import logging
from typing import Optional

import numpy as np

from . import settings
from .errors import CodebookIndexError, ShapeError
from .types import ArrayGeometry, CouplingModel, ElementPattern, FrequencyGrid

logger = logging.getLogger(__name__)


def subcarrier_frequency(grid: FrequencyGrid, k) -> np.ndarray | float:
    """Frequency of 1-based subcarrier ``k``: f_c + (k - 1 - K/2) * df."""
    ks = np.asarray(k)
    if np.any(ks < 1) or np.any(ks > grid.num_subcarriers):
        raise CodebookIndexError(f"subcarrier index out of range 1..{grid.num_subcarriers}: {k}")
    f = grid.center_frequency_hz + (ks - 1 - grid.num_subcarriers / 2) * grid.subcarrier_spacing_hz
    return float(f) if np.ndim(f) == 0 else f


def normalize_angle(theta):
    return np.mod(theta, 2 * np.pi)


def element_gain(pattern: Optional[ElementPattern], theta):
    """Field gain F(theta); ``pattern=None`` is an isotropic element (F = 1)."""
    theta = normalize_angle(np.asarray(theta, dtype=float))
    if pattern is None:
        gain = np.ones_like(theta)
    else:
        front = theta <= np.pi
        gain = np.where(front, pattern.front_gain_scale * np.sin(theta), pattern.back_leakage)
    return float(gain) if gain.ndim == 0 else gain


def array_response(
    geom: ArrayGeometry,
    pattern: Optional[ElementPattern],
    f_k,
    theta,
) -> np.ndarray:
    """
    Array response a(k, theta).

    Scalar ``theta`` gives shape (M,); an array of angles gives (M, len(theta)).
    An array of frequencies adds a leading axis: (n_k, M, ...).
    """
    theta_arr = np.asarray(theta, dtype=float)
    ratio = np.asarray(f_k, dtype=float) / geom.reference_frequency_hz
    m = np.arange(1, geom.num_elements + 1) - (geom.num_elements + 1) / 2
    phase = 2 * np.pi * geom.spacing_normalized * np.multiply.outer(ratio, np.multiply.outer(m, np.cos(theta_arr)))
    return element_gain(pattern, theta_arr) * np.exp(1j * phase)


def coupling_matrix(geom: ArrayGeometry, model: CouplingModel, f_k) -> np.ndarray:
    """S[k] of shape (M, M), or (n_k, M, M) for an array of frequencies."""
    idx = np.arange(geom.num_elements)
    dist = np.abs(np.subtract.outer(idx, idx))
    ratio = np.asarray(f_k, dtype=float) / geom.reference_frequency_hz
    phase = 2 * np.pi * geom.spacing_normalized * np.multiply.outer(ratio, dist)
    # diagonal is zero; the max() only keeps the division finite there
    return np.where(dist > 0, model.amplitude * np.exp(-1j * phase) / np.maximum(dist, 1), 0.0)


def radiation_pattern(
    geom: ArrayGeometry,
    S: Optional[np.ndarray],
    p: np.ndarray,
    f_k: float,
    theta_grid,
    pattern: Optional[ElementPattern] = ElementPattern(),
) -> np.ndarray:
    """Field pattern Psi(k, theta) = a^H (I + S) p on ``theta_grid``."""
    p = np.asarray(p)
    theta_grid = np.atleast_1d(np.asarray(theta_grid, dtype=float))
    M = geom.num_elements
    if p.shape != (M,):
        raise ShapeError(f"beamformer has shape {p.shape}, expected ({M},)")
    if theta_grid.size == 0:
        raise ShapeError("theta_grid must not be empty")
    if S is not None and S.shape != (M, M):
        raise ShapeError(f"coupling matrix has shape {S.shape}, expected ({M}, {M})")
    excitation = p if S is None else p + S @ p
    A = array_response(geom, pattern, f_k, theta_grid)
    return A.conj().T @ excitation


def angle_grid(points: Optional[int] = None) -> np.ndarray:
    """Uniform grid over [0, pi) used for pattern argmax and export."""
    n = points or settings.ANGLE_GRID_POINTS
    return np.arange(n) * (np.pi / n)


def pattern_argmax(
    geom: ArrayGeometry,
    p: np.ndarray,
    f_k: float,
    S: Optional[np.ndarray] = None,
    pattern: Optional[ElementPattern] = ElementPattern(),
    points: Optional[int] = None,
) -> float:
    """Grid angle maximizing |Psi|^2; lowest angle on ties."""
    grid = angle_grid(points)
    power = np.abs(radiation_pattern(geom, S, p, f_k, grid, pattern)) ** 2
    return float(grid[int(np.argmax(power))])


def beam_peak_cosine(M: int, m: int, f_k: float, f0: float, d: float = 0.5) -> float:
    """Closed-form main-beam direction cos(theta*) of b_m(M) at f_k, clamped to [-1, 1]."""
    beta = np.pi * (1 - 2 * (m - 1) / M)
    return float(np.clip(beta / (2 * np.pi * d * f_k / f0), -1.0, 1.0))


def power_dbi(psi: np.ndarray) -> np.ndarray:
    # raw 10*log10(|Psi|^2); floor avoids -inf in exported CSVs
    return 10 * np.log10(np.maximum(np.abs(psi) ** 2, 1e-30))
