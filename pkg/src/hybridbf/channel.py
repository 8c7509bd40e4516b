"""
Statistical multipath channel and the MMWCH1 channel-file format.

The downlink matrix at subcarrier k is

    H[k] = (I + S_ue[k]) (sum_l alpha_l a_ue(k, theta_ue,l) a_ap(k, theta_ap,l)^H) (I + S_ap[k])

and the uplink matrix is always its transpose; no uplink tensor is stored.
Path parameters are drawn once per user and held across all subcarriers.
"""

from __future__ import annotations

import logging
import struct
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from .array import array_response, coupling_matrix, subcarrier_frequency
from .errors import ChannelFormatError, ShapeError
from .types import (
    ArrayGeometry,
    ChannelConfig,
    ChannelTensor,
    CouplingModel,
    ElementPattern,
    FrequencyGrid,
    PathSet,
)

logger = logging.getLogger(__name__)

MAGIC = b"MMWCH1\x00\x00"
HEADER = struct.Struct("<4I")
HEADER_SIZE = len(MAGIC) + HEADER.size
ENTRY_SIZE = 16  # two little-endian float64 per complex entry
MAX_PAYLOAD_BYTES = 1 << 40


def draw_paths(rng: np.random.Generator, config: ChannelConfig) -> PathSet:
    L = config.num_paths
    aod = rng.uniform(0.0, np.pi, size=L)
    aoa = rng.uniform(0.0, np.pi, size=L)
    std = np.sqrt(config.path_variances / 2)
    gains = std * (rng.standard_normal(L) + 1j * rng.standard_normal(L))
    return PathSet(aod, aoa, gains)


def channel_matrix(
    paths: PathSet,
    ap_array: ArrayGeometry,
    sta_array: ArrayGeometry,
    coupling: complex,
    f_k,
    pattern: Optional[ElementPattern] = ElementPattern(),
) -> np.ndarray:
    """
    Downlink matrix H[k] of shape (M_ue, M_ap) at frequency ``f_k``.

    An array of frequencies gives the stack (n_k, M_ue, M_ap).
    """
    if ap_array.reference_frequency_hz != sta_array.reference_frequency_hz:
        raise ShapeError("AP and STA arrays must share a reference frequency")
    A_ue = array_response(sta_array, pattern, f_k, paths.aoa)  # (..., M_ue, L)
    A_ap = array_response(ap_array, pattern, f_k, paths.aod)  # (..., M_ap, L)
    H = (A_ue * paths.gains) @ np.swapaxes(A_ap.conj(), -1, -2)
    if coupling:
        model = CouplingModel(coupling)
        S_ue = coupling_matrix(sta_array, model, f_k)
        S_ap = coupling_matrix(ap_array, model, f_k)
        H = (H + S_ue @ H) + (H + S_ue @ H) @ S_ap
    return H


def generate_channel_tensor(
    rng: np.random.Generator,
    config: ChannelConfig,
    users: int,
    grid: FrequencyGrid,
    ap_array: ArrayGeometry,
    sta_array: ArrayGeometry,
    subcarriers: Optional[Sequence[int]] = None,
    pattern: Optional[ElementPattern] = ElementPattern(),
) -> Tuple[ChannelTensor, List[PathSet]]:
    """
    Channel tensor for ``users`` independent users.

    ``subcarriers`` (1-based) restricts the evaluated frequencies; all K
    subcarriers are generated when omitted.
    """
    ks = np.arange(1, grid.num_subcarriers + 1) if subcarriers is None else np.asarray(subcarriers, dtype=int)
    freqs = np.atleast_1d(subcarrier_frequency(grid, ks))
    paths = [draw_paths(rng, config) for _ in range(users)]
    out = np.stack(
        [channel_matrix(p, ap_array, sta_array, config.coupling_amplitude, freqs, pattern) for p in paths]
    )
    return ChannelTensor(out, ks, grid.num_subcarriers), paths


def _mean_steered_power(
    geom: ArrayGeometry,
    pattern: Optional[ElementPattern],
    f_k: float,
    coupling: complex,
    transpose: bool,
) -> float:
    # (1/pi) * integral over [0, pi] of ||(I + S) a||^2, with (I + S)^H on the AP side
    M = geom.num_elements
    T = np.eye(M, dtype=complex)
    if coupling:
        T = T + coupling_matrix(geom, CouplingModel(coupling), f_k)
    if transpose:
        T = T.conj().T

    def integrand(theta: float) -> float:
        a = array_response(geom, pattern, f_k, theta)
        return float(np.sum(np.abs(T @ a) ** 2))

    value, _ = integrate.quad(integrand, 0.0, np.pi, limit=200)
    return value / np.pi


def expected_channel_power(
    config: ChannelConfig,
    ap_array: ArrayGeometry,
    sta_array: ArrayGeometry,
    f_k: float,
    pattern: Optional[ElementPattern] = ElementPattern(),
) -> float:
    """
    Exact E||H[k]||_F^2 implied by the model, by numerical integration.

    Independent zero-mean path gains remove every cross term, so the
    expectation factors into per-path gain variance times the AP-side and
    STA-side mean steered powers.
    """
    c = config.coupling_amplitude
    sta = _mean_steered_power(sta_array, pattern, f_k, c, transpose=False)
    ap = _mean_steered_power(ap_array, pattern, f_k, c, transpose=True)
    return float(config.path_variances.sum() * sta * ap)


# MMWCH1 binary format


def save_channel_file(tensor: ChannelTensor, path: str | Path) -> None:
    """Write ``tensor`` as MMWCH1. The tensor must hold every subcarrier 1..K."""
    U, Kn, M_ue, M_ap = tensor.matrices.shape
    if Kn != tensor.num_subcarriers or not np.array_equal(tensor.subcarriers, np.arange(1, Kn + 1)):
        raise ShapeError("only full-band tensors (all K subcarriers) can be saved")
    payload = np.ascontiguousarray(tensor.matrices, dtype="<c16")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as f:
        f.write(MAGIC)
        f.write(HEADER.pack(U, Kn, M_ue, M_ap))
        f.write(payload.tobytes())
    logger.info("wrote channel file %s U=%d K=%d M_ue=%d M_ap=%d", path, U, Kn, M_ue, M_ap)


def load_channel_file(
    path: str | Path,
    expected: Optional[Tuple[Optional[int], Optional[int], Optional[int], Optional[int]]] = None,
) -> ChannelTensor:
    """
    Read an MMWCH1 file.

    ``expected`` is an optional (U, K, M_ue, M_ap) tuple; ``None`` entries
    are not checked. Any mismatch or malformed content raises
    ChannelFormatError with the offending byte offset.
    """
    data = Path(path).read_bytes()
    if len(data) < len(MAGIC) or data[: len(MAGIC)] != MAGIC:
        raise ChannelFormatError("bad magic, not an MMWCH1 channel file", 0)
    if len(data) < HEADER_SIZE:
        raise ChannelFormatError("truncated header", len(data))
    dims = HEADER.unpack_from(data, len(MAGIC))
    names = ("U", "K", "M_ue", "M_ap")
    for i, (name, value) in enumerate(zip(names, dims)):
        if value == 0:
            raise ChannelFormatError(f"header field {name} is zero", len(MAGIC) + 4 * i)
    count = int(np.prod(dims, dtype=object))
    payload_bytes = count * ENTRY_SIZE
    if payload_bytes > MAX_PAYLOAD_BYTES:
        raise ChannelFormatError(f"dimension overflow: payload of {payload_bytes} bytes", len(MAGIC))
    if expected is not None:
        for i, (name, want, got) in enumerate(zip(names, expected, dims)):
            if want is not None and want != got:
                raise ChannelFormatError(
                    f"header field {name}={got} does not match configured {want}",
                    len(MAGIC) + 4 * i,
                )
    end = HEADER_SIZE + payload_bytes
    if len(data) < end:
        # offset of the first missing complex entry
        complete = (len(data) - HEADER_SIZE) // ENTRY_SIZE
        raise ChannelFormatError(
            f"truncated payload: {complete} of {count} entries present",
            HEADER_SIZE + complete * ENTRY_SIZE,
        )
    if len(data) > end:
        raise ChannelFormatError(f"{len(data) - end} trailing bytes after payload", end)
    values = np.frombuffer(data, dtype="<c16", count=count, offset=HEADER_SIZE)
    matrices = values.astype(complex).reshape(dims)
    if not np.all(np.isfinite(matrices)):
        bad = int(np.flatnonzero(~np.isfinite(matrices.ravel()))[0])
        raise ChannelFormatError("non-finite channel entry", HEADER_SIZE + bad * ENTRY_SIZE)
    U, K, M_ue, M_ap = dims
    logger.info("loaded channel file %s U=%d K=%d M_ue=%d M_ap=%d", path, U, K, M_ue, M_ap)
    return ChannelTensor(matrices, np.arange(1, K + 1), K)
