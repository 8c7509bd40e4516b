"""
Orthogonal beamformer set B(M) and the four hierarchical codebooks.

All indices are 1-based, matching the codeword enumeration (ascending m, then n).
Codewords are plain complex numpy arrays; the norm class of each set is
recorded on the set, not per vector.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from .errors import CodebookIndexError, ConfigError
from .types import Beamformer, ScenarioMode

logger = logging.getLogger(__name__)


def _check_index(name: str, value: int, upper: int) -> None:
    if not 1 <= value <= upper:
        raise CodebookIndexError(f"{name}={value} out of range 1..{upper}")


def beam_phase_step(M: int, m: int) -> float:
    """Inter-element phase step beta_m(M) = pi * (1 - 2(m-1)/M)."""
    return np.pi * (1 - 2 * (m - 1) / M)


def orthogonal_beamformer(M: int, m: int) -> Beamformer:
    _check_index("m", m, M)
    i = np.arange(M)
    coeffs = np.exp(1j * i * beam_phase_step(M, m)) / np.sqrt(M)
    return Beamformer(coeffs, "unit")


@dataclass(frozen=True, eq=False)
class OrthogonalSet:
    M: int
    vectors: np.ndarray  # (M, M), row m-1 is b_m(M)

    def __getitem__(self, m: int) -> np.ndarray:
        _check_index("m", m, self.M)
        return self.vectors[m - 1]

    def gram(self) -> np.ndarray:
        return self.vectors.conj() @ self.vectors.T


@lru_cache(maxsize=32)
def build_orthogonal_set(M: int) -> OrthogonalSet:
    if M < 1:
        raise ConfigError(f"orthogonal set size must be >= 1, got {M}")
    vectors = np.stack([orthogonal_beamformer(M, m).coefficients for m in range(1, M + 1)])
    vectors.setflags(write=False)
    return OrthogonalSet(M, vectors)


def ap_sector_index(m: int, n: int, N_rf: int, M_ap: Optional[int] = None) -> int:
    if M_ap is not None:
        _check_index("m", m, M_ap // N_rf)
    elif m < 1:
        raise CodebookIndexError(f"m={m} must be >= 1")
    _check_index("n", n, N_rf)
    return (m - 1) * N_rf + n


@dataclass(frozen=True, eq=False)
class ApSectorCodebook:
    matrices: np.ndarray  # (M_ap/N_rf, M_ap, N_rf)
    norm_class: str = "inv_sqrt_nrf_column"

    def __len__(self) -> int:
        return self.matrices.shape[0]

    def __getitem__(self, m: int) -> np.ndarray:
        _check_index("m", m, len(self))
        return self.matrices[m - 1]


@dataclass(frozen=True, eq=False)
class ApNarrowCodebook:
    matrices: np.ndarray  # (M_ap/N_rf, N_rf, M_ap, N_rf)
    norm_class: str = "inv_sqrt_nrf_column"

    def __getitem__(self, key: Tuple[int, int]) -> np.ndarray:
        m, n = key
        _check_index("m", m, self.matrices.shape[0])
        _check_index("n", n, self.matrices.shape[1])
        return self.matrices[m - 1, n - 1]

    def __len__(self) -> int:
        return self.matrices.shape[0] * self.matrices.shape[1]


@dataclass(frozen=True, eq=False)
class StaSectorCodebook:
    vectors: np.ndarray  # (M_sub, M_ue)
    norm_class: str = "subarray_scaled"

    def __len__(self) -> int:
        return self.vectors.shape[0]

    def __getitem__(self, m: int) -> np.ndarray:
        _check_index("m", m, len(self))
        return self.vectors[m - 1]


@dataclass(frozen=True, eq=False)
class StaNarrowCodebook:
    vectors: np.ndarray  # (M_sub, M_ue/M_sub + 1, M_ue)
    indices: np.ndarray  # l(m, n) into B(M_ue), same leading shape
    norm_class: str = "unit"

    def __getitem__(self, key: Tuple[int, int]) -> np.ndarray:
        m, n = key
        _check_index("m", m, self.vectors.shape[0])
        _check_index("n", n, self.vectors.shape[1])
        return self.vectors[m - 1, n - 1]

    def __len__(self) -> int:
        return self.vectors.shape[0] * self.vectors.shape[1]

    def beams_in_sector(self, m: int) -> np.ndarray:
        _check_index("m", m, self.vectors.shape[0])
        return self.vectors[m - 1]


def _require_divisible(M_ap: int, N_rf: int) -> None:
    if N_rf < 1 or M_ap < 1 or M_ap % N_rf:
        raise ConfigError(f"rf_chains ({N_rf}) must divide ap_antennas ({M_ap})")


def _require_even_ratio(M_ue: int, M_sub: int) -> int:
    if M_sub < 1 or M_ue % M_sub or (M_ue // M_sub) % 2:
        raise ConfigError(
            f"sta_antennas/sta_subarray must be a positive even integer (got {M_ue}/{M_sub})"
        )
    return M_ue // M_sub


def build_ap_sector_codebook(M_ap: int, N_rf: int) -> ApSectorCodebook:
    _require_divisible(M_ap, N_rf)
    B = build_orthogonal_set(M_ap).vectors
    # column n of P^(m) is b_{(m-1)N_rf+n}; rows of B are already in that order
    mats = B.reshape(M_ap // N_rf, N_rf, M_ap).transpose(0, 2, 1) / np.sqrt(N_rf)
    return ApSectorCodebook(np.ascontiguousarray(mats))


def build_ap_narrow_codebook(M_ap: int, N_rf: int) -> ApNarrowCodebook:
    _require_divisible(M_ap, N_rf)
    B = build_orthogonal_set(M_ap).vectors.reshape(M_ap // N_rf, N_rf, M_ap)
    mats = np.repeat(B[..., None], N_rf, axis=-1) / np.sqrt(N_rf)
    return ApNarrowCodebook(mats)


def build_sta_sector_codebook(M_ue: int, M_sub: int) -> StaSectorCodebook:
    _require_even_ratio(M_ue, M_sub)
    vectors = np.zeros((M_sub, M_ue), dtype=complex)
    # the active subarray is the first M_sub elements
    vectors[:, :M_sub] = np.sqrt(M_sub / M_ue) * build_orthogonal_set(M_sub).vectors
    return StaSectorCodebook(vectors)


def wrap_index(value: int, M: int) -> int:
    """Mod-M wrap onto 1..M, with a zero remainder mapping to M."""
    r = value % M
    return M if r == 0 else r


def sta_narrow_index(m: int, n: int, M_ue: int, M_sub: int) -> int:
    ratio = _require_even_ratio(M_ue, M_sub)
    _check_index("m", m, M_sub)
    _check_index("n", n, ratio + 1)
    return wrap_index(ratio * (m - 1) - ratio // 2 + n, M_ue)


def build_sta_narrow_codebook(M_ue: int, M_sub: int) -> StaNarrowCodebook:
    ratio = _require_even_ratio(M_ue, M_sub)
    indices = np.array(
        [[sta_narrow_index(m, n, M_ue, M_sub) for n in range(1, ratio + 2)] for m in range(1, M_sub + 1)]
    )
    B = build_orthogonal_set(M_ue).vectors
    return StaNarrowCodebook(B[indices - 1], indices)


def effective_downlink_beamformer(P: np.ndarray) -> np.ndarray:
    """Single-vector equivalent P 1 / sqrt(N_rf) of an analog matrix."""
    return P.sum(axis=1) / np.sqrt(P.shape[1])


@dataclass(frozen=True, eq=False)
class CodebookSet:
    """The codebooks used by one scenario mode, with their base sets."""

    mode: ScenarioMode
    M_ap: int
    M_ue: int
    M_sub: int
    N_rf: int
    ap_base: OrthogonalSet
    sta_base: OrthogonalSet
    ap_sector: ApSectorCodebook
    ap_narrow: ApNarrowCodebook
    sta_sector: np.ndarray  # stage-1 STA set G_s, shape (|G_s|, M_ue)
    sta_narrow: Optional[StaNarrowCodebook]

    @property
    def ap_sectors(self) -> int:
        return self.M_ap // self.N_rf

    def named_sets(self) -> Iterator[Tuple[str, np.ndarray]]:
        """(name, codewords) pairs, each codeword shaped (index_m, index_n, elements)."""
        yield "ap_orthogonal", self.ap_base.vectors[:, None, :]
        # sector matrices are dumped per column: index_n is the RF chain
        yield "ap_sector", self.ap_sector.matrices.transpose(0, 2, 1)
        yield "ap_narrow", self.ap_narrow.matrices[..., 0]
        yield "sta_sector", self.sta_sector[:, None, :]
        if self.sta_narrow is not None:
            yield "sta_narrow", self.sta_narrow.vectors


def build_codebooks(
    M_ap: int, N_rf: int, M_ue: int, M_sub: int, mode: ScenarioMode = "full"
) -> CodebookSet:
    ap_sector = build_ap_sector_codebook(M_ap, N_rf)
    ap_narrow = build_ap_narrow_codebook(M_ap, N_rf)
    sta_base = build_orthogonal_set(M_ue)
    if mode == "full":
        sta_sector = build_sta_sector_codebook(M_ue, M_sub).vectors
        sta_narrow: Optional[StaNarrowCodebook] = build_sta_narrow_codebook(M_ue, M_sub)
    elif mode == "single_user_exhaustive_sta":
        # no subarray: stage 1 sweeps the full-array set
        sta_sector = sta_base.vectors
        sta_narrow = None
    elif mode == "single_antenna_sta":
        sta_sector = np.ones((1, 1), dtype=complex)
        sta_narrow = None
    else:
        raise ConfigError(f"unknown scenario mode: {mode}")
    logger.debug(
        "codebooks built mode=%s M_ap=%d N_rf=%d M_ue=%d M_sub=%d", mode, M_ap, N_rf, M_ue, M_sub
    )
    return CodebookSet(
        mode=mode,
        M_ap=M_ap,
        M_ue=sta_sector.shape[1],
        M_sub=M_sub,
        N_rf=N_rf,
        ap_base=build_orthogonal_set(M_ap),
        sta_base=sta_base if mode != "single_antenna_sta" else build_orthogonal_set(1),
        ap_sector=ap_sector,
        ap_narrow=ap_narrow,
        sta_sector=sta_sector,
        sta_narrow=sta_narrow,
    )


def codebook_sizes(books: CodebookSet) -> Dict[str, int]:
    """Codeword count per set; an AP sector matrix counts once."""
    sizes = {name: int(np.prod(words.shape[:2])) for name, words in books.named_sets()}
    sizes["ap_sector"] = len(books.ap_sector)
    return sizes
