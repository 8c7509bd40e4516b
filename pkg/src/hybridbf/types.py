from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional, Protocol, Sequence, Tuple

import numpy as np

from .errors import ConfigError

ScenarioMode = Literal["full", "single_user_exhaustive_sta", "single_antenna_sta"]
NormClass = Literal["unit", "inv_sqrt_nrf_column", "subarray_scaled"]
EstimationPath = Literal["waveform", "projected"]
IndexPair = Tuple[int, int]
Stage = Literal["stage1", "stage2", "stage3", "exhaustive", "equivalent"]


@dataclass(frozen=True)
class ArrayGeometry:
    num_elements: int
    spacing_normalized: float = 0.5  # wavelengths at the reference frequency
    reference_frequency_hz: float = 60e9

    def __post_init__(self):
        if self.num_elements < 1:
            raise ConfigError(f"num_elements must be >= 1, got {self.num_elements}")
        if self.spacing_normalized <= 0:
            raise ConfigError("spacing_normalized must be > 0")
        if self.reference_frequency_hz <= 0:
            raise ConfigError("reference_frequency_hz must be > 0")


@dataclass(frozen=True)
class FrequencyGrid:
    center_frequency_hz: float
    subcarrier_spacing_hz: float
    num_subcarriers: int

    def __post_init__(self):
        if self.subcarrier_spacing_hz <= 0:
            raise ConfigError("subcarrier_spacing_hz must be > 0")
        if self.num_subcarriers < 1:
            raise ConfigError("num_subcarriers must be >= 1")
        lowest = self.center_frequency_hz - (self.num_subcarriers // 2) * self.subcarrier_spacing_hz
        if lowest <= 0:
            raise ConfigError("every subcarrier frequency must be > 0")


@dataclass(frozen=True)
class ElementPattern:
    front_gain_scale: float = 2.0
    back_leakage: float = 1e-2

    def __post_init__(self):
        if self.front_gain_scale <= 0:
            raise ConfigError("front_gain_scale must be > 0")
        if not 0 < self.back_leakage < self.front_gain_scale:
            raise ConfigError("back_leakage must lie in (0, front_gain_scale)")


@dataclass(frozen=True)
class CouplingModel:
    amplitude: complex = 0.1  # adjacent-element coupling, -20 dB

    def __post_init__(self):
        if abs(self.amplitude) >= 1:
            raise ConfigError(f"|coupling amplitude| must be < 1, got {abs(self.amplitude)}")


@dataclass(frozen=True, eq=False)
class Beamformer:
    coefficients: np.ndarray
    norm_class: NormClass = "unit"

    @property
    def size(self) -> int:
        return int(self.coefficients.shape[0])


@dataclass(frozen=True, eq=False)
class PathSet:
    aod: np.ndarray  # theta_ap per path, rad
    aoa: np.ndarray  # theta_ue per path, rad
    gains: np.ndarray  # complex alpha per path

    def __post_init__(self):
        if not (len(self.aod) == len(self.aoa) == len(self.gains)) or len(self.gains) < 1:
            raise ConfigError("path set arrays must share a length >= 1")

    @property
    def num_paths(self) -> int:
        return len(self.gains)


@dataclass(frozen=True)
class ChannelConfig:
    num_paths: int = 1
    power_profile_db: Tuple[float, ...] = (0.0,)
    coupling_amplitude: complex = 0.1  # both array ends
    normalize: bool = True

    def __post_init__(self):
        if self.num_paths < 1:
            raise ConfigError(f"num_paths must be >= 1, got {self.num_paths}")
        if len(self.power_profile_db) != self.num_paths:
            raise ConfigError("power_profile_db length must equal num_paths")

    @property
    def path_variances(self) -> np.ndarray:
        w = 10 ** (np.asarray(self.power_profile_db, dtype=float) / 10)
        return w / w.sum() if self.normalize else w


@dataclass(frozen=True, eq=False)
class ChannelTensor:
    """Downlink matrices H_u[k] with shape (U, len(subcarriers), M_ue, M_ap)."""

    matrices: np.ndarray
    subcarriers: np.ndarray  # 1-based subcarrier indices held by `matrices`
    num_subcarriers: int

    @property
    def num_users(self) -> int:
        return int(self.matrices.shape[0])

    @property
    def sta_antennas(self) -> int:
        return int(self.matrices.shape[2])

    @property
    def ap_antennas(self) -> int:
        return int(self.matrices.shape[3])

    def restrict(self, subcarriers) -> "ChannelTensor":
        wanted = np.asarray(subcarriers, dtype=int)
        lookup = {int(k): i for i, k in enumerate(self.subcarriers)}
        missing = [int(k) for k in wanted if int(k) not in lookup]
        if missing:
            raise ConfigError(f"subcarriers not present in tensor: {missing[:5]}")
        rows = [lookup[int(k)] for k in wanted]
        return ChannelTensor(self.matrices[:, rows], wanted, self.num_subcarriers)

    def uplink(self, user: int) -> np.ndarray:
        """Uplink matrices H^T[k] for one user; never stored separately."""
        return np.swapaxes(self.matrices[user], -1, -2)


@dataclass(frozen=True, eq=False)
class TrainingSignal:
    sequences: np.ndarray  # (K_tx, T) unit-modulus symbols
    pilots: np.ndarray  # 1-based pilot subcarrier indices
    num_subcarriers: int  # subcarriers sharing the training power, the K of sqrt(rho/K)

    @property
    def length(self) -> int:
        return int(self.sequences.shape[1])


@dataclass(frozen=True)
class LinkBudget:
    total_power: float
    noise_variance: float

    def __post_init__(self):
        if self.total_power <= 0:
            raise ConfigError("total_power must be > 0")
        if self.noise_variance < 0:
            raise ConfigError("noise_variance must be >= 0")

    @property
    def snr(self) -> float:
        return self.total_power / self.noise_variance if self.noise_variance else float("inf")

    @classmethod
    def from_snr_db(cls, snr_db: float, total_power: float = 1.0) -> "LinkBudget":
        return cls(total_power, total_power * 10 ** (-snr_db / 10))


@dataclass(frozen=True)
class TransmissionRecord:
    user: int
    stage: Stage
    ap_index: int
    sta_index: int
    chain: int
    objective: float


@dataclass(frozen=True, eq=False)
class StageOneResult:
    m_star: int
    n_star: int
    m_prime_star_stage1: int
    ap_beam_index: int  # l_{n*}(m*) in B(M_ap), 1-based
    p_star: np.ndarray
    P_star: np.ndarray
    objectives: np.ndarray  # (M_ap/N_rf, |G_s|, N_rf)
    transmissions: int


@dataclass(frozen=True, eq=False)
class UserSelection:
    user: int
    ap_beam_index: int  # 1-based index into B(M_ap)
    sta_beam_index: int  # 1-based index into B(M_ue)
    p_star: np.ndarray
    g_star: np.ndarray
    stage1: StageOneResult
    m_prime_star: Optional[int]
    n_prime_star: Optional[int]
    stage_objectives: Dict[str, np.ndarray]
    training_count: int


@dataclass(frozen=True, eq=False)
class BeamSelectionResult:
    users: List[UserSelection]
    mode: ScenarioMode
    log: List[TransmissionRecord] = field(default_factory=list)

    @property
    def training_count(self) -> int:
        return sum(sel.training_count for sel in self.users)

    @property
    def ap_beams(self) -> List[np.ndarray]:
        return [sel.p_star for sel in self.users]


@dataclass(frozen=True, eq=False)
class EquivalentChannel:
    rows: np.ndarray  # (U, len(subcarriers), N_rf)
    subcarriers: np.ndarray

    @property
    def num_users(self) -> int:
        return int(self.rows.shape[0])


@dataclass(frozen=True, eq=False)
class DigitalPrecoder:
    matrices: np.ndarray  # (K, N_rf, U)
    powers: np.ndarray  # rho_u, sums to at most rho


@dataclass(frozen=True, eq=False)
class OracleSolution:
    ap_beam_index: int
    sta_beam_index: int
    p_opt: np.ndarray
    g_opt: np.ndarray
    objective: float
    pairs_evaluated: int


@dataclass(frozen=True, eq=False)
class RateReport:
    per_user: np.ndarray
    sum_rate: float
    excluded: int = 0


@dataclass(frozen=True)
class MetricValue:
    name: str  # e.g. "bser"
    value: float
    latency_ms: int
    samples: int = 0


@dataclass(frozen=True)
class RealizationOutcome:
    """Everything one realization contributes to one SNR point."""

    index: int
    snr_db: float
    selected: Tuple[IndexPair, ...]  # (ap, sta) beam index per user
    optimal: Tuple[IndexPair, ...]
    achieved_objective: Tuple[float, ...]  # noiseless objective of the selected pair
    optimal_objective: Tuple[float, ...]
    training_count: int
    sum_rate_hybrid: Optional[float] = None
    sum_rate_digital_bd: Optional[float] = None
    per_user_rates: Optional[Tuple[float, ...]] = None
    excluded: bool = False
    diagnosis: str = ""


@dataclass(frozen=True)
class SummaryRow:
    config_id: str
    snr_db: float
    realizations: int
    bser: float
    loss_db: float
    sum_rate_hybrid: float
    sum_rate_digital_bd: float
    excluded_count: int


class Metric(Protocol):
    name: str

    def score(self, outcomes: Sequence[RealizationOutcome]) -> MetricValue: ...


@dataclass(frozen=True)
class GapReport:
    gap_db: float
    points_used: int
    points_total: int
    diagnostic: str = ""

