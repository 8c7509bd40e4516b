"""
Hierarchical analog beam selection.

Stage 1 (uplink): the STA sweeps its sector beams while the AP receives on
its sector matrices, one narrow beam per RF chain.
Stage 2 (downlink): the AP transmits on the chosen narrow beam and the STA
re-selects its sector.
Stage 3 (downlink): the STA sweeps the narrow beams overlapping that sector.
Stage 4: the per-user AP beams are assembled into the analog matrix.

All argmax decisions take the lowest index on ties, in (m, m', n) order.
Objectives are sums of |estimate|^2 over the pilot subcarriers.
"""

from __future__ import annotations

import logging
from typing import Dict, List, Optional, Sequence

import numpy as np

from .codebook import CodebookSet, StaNarrowCodebook, ap_sector_index
from .errors import ConfigError, InfeasibleError
from .signal import sweep_downlink, sweep_uplink
from .types import (
    BeamSelectionResult,
    ChannelTensor,
    EstimationPath,
    LinkBudget,
    ScenarioMode,
    StageOneResult,
    TrainingSignal,
    TransmissionRecord,
    UserSelection,
)

logger = logging.getLogger(__name__)


def _require_pilots(training: TrainingSignal) -> None:
    if len(training.pilots) == 0:
        raise ConfigError("pilot set is empty")


def stage1_uplink(
    H: np.ndarray,
    books: CodebookSet,
    training: TrainingSignal,
    budget: LinkBudget,
    rng: np.random.Generator,
    path: EstimationPath = "waveform",
    user: int = 0,
    log: Optional[List[TransmissionRecord]] = None,
) -> StageOneResult:
    """Joint AP sector / STA sector sweep; ``H`` holds the pilot subcarriers only."""
    _require_pilots(training)
    v_hat = sweep_uplink(books.ap_sector.matrices, books.sta_sector, H, training, budget, rng, path)
    objectives = np.sum(np.abs(v_hat) ** 2, axis=-1)  # (A, S, N_rf)
    a, s, n = np.unravel_index(int(np.argmax(objectives)), objectives.shape)
    m_star, m_prime, n_star = int(a) + 1, int(s) + 1, int(n) + 1
    l_star = ap_sector_index(m_star, n_star, books.N_rf)

    if log is not None:
        for m in range(objectives.shape[0]):
            for mp in range(objectives.shape[1]):
                chain = int(np.argmax(objectives[m, mp]))
                log.append(
                    TransmissionRecord(
                        user, "stage1", m + 1, mp + 1, chain + 1, float(objectives[m, mp, chain])
                    )
                )
    logger.debug("user %d stage1: m*=%d n*=%d m'*=%d l=%d", user, m_star, n_star, m_prime, l_star)
    return StageOneResult(
        m_star=m_star,
        n_star=n_star,
        m_prime_star_stage1=m_prime,
        ap_beam_index=l_star,
        p_star=books.ap_base[l_star],
        P_star=books.ap_narrow[m_star, n_star],
        objectives=objectives,
        transmissions=objectives.shape[0] * objectives.shape[1],
    )


def _downlink_argmax(
    candidates: np.ndarray,
    H: np.ndarray,
    P_star: np.ndarray,
    training: TrainingSignal,
    budget: LinkBudget,
    rng: np.random.Generator,
    path: EstimationPath,
) -> tuple[int, np.ndarray]:
    w_hat = sweep_downlink(candidates, H, P_star, training, budget, rng, path)
    objectives = np.sum(np.abs(w_hat) ** 2, axis=-1)
    return int(np.argmax(objectives)) + 1, objectives


def stage2_downlink(
    H: np.ndarray,
    P_star: np.ndarray,
    G_s: np.ndarray,
    training: TrainingSignal,
    budget: LinkBudget,
    rng: np.random.Generator,
    path: EstimationPath = "waveform",
    user: int = 0,
    log: Optional[List[TransmissionRecord]] = None,
) -> tuple[int, np.ndarray]:
    """STA sector re-selection; returns (m'*, per-sector objectives)."""
    _require_pilots(training)
    m_prime, objectives = _downlink_argmax(G_s, H, P_star, training, budget, rng, path)
    if log is not None:
        log.extend(
            TransmissionRecord(user, "stage2", 0, i + 1, 0, float(o)) for i, o in enumerate(objectives)
        )
    logger.debug("user %d stage2: m'*=%d", user, m_prime)
    return m_prime, objectives


def stage3_downlink(
    H: np.ndarray,
    P_star: np.ndarray,
    m_prime_star: int,
    narrow: StaNarrowCodebook,
    training: TrainingSignal,
    budget: LinkBudget,
    rng: np.random.Generator,
    path: EstimationPath = "waveform",
    user: int = 0,
    log: Optional[List[TransmissionRecord]] = None,
) -> tuple[int, int, np.ndarray, np.ndarray]:
    """Narrow STA sweep inside sector m'*; returns (n'*, l(m'*, n'*), g*, objectives)."""
    _require_pilots(training)
    candidates = narrow.beams_in_sector(m_prime_star)
    n_prime, objectives = _downlink_argmax(candidates, H, P_star, training, budget, rng, path)
    sta_index = int(narrow.indices[m_prime_star - 1, n_prime - 1])
    if log is not None:
        log.extend(
            TransmissionRecord(user, "stage3", 0, int(narrow.indices[m_prime_star - 1, i]), 0, float(o))
            for i, o in enumerate(objectives)
        )
    logger.debug("user %d stage3: n'*=%d l=%d", user, n_prime, sta_index)
    return n_prime, sta_index, candidates[n_prime - 1], objectives


def _column_owners(U: int, N_rf: int) -> np.ndarray:
    # contiguous blocks, earlier users take the remainder: N_rf=4, U=2 -> [0, 0, 1, 1]
    counts = [N_rf // U + (1 if u < N_rf % U else 0) for u in range(U)]
    return np.repeat(np.arange(U), counts)


def build_analog_matrix(
    beams: Sequence[np.ndarray],
    N_rf: int,
    beam_indices: Optional[Sequence[int]] = None,
) -> np.ndarray:
    """
    Stage-4 analog matrix with one or more columns per user.

    Each column is p_u / sqrt(N_rf). Raises InfeasibleError when users
    outnumber RF chains or two users selected the same AP beam.
    """
    U = len(beams)
    if U < 1:
        raise ConfigError("at least one user is required")
    if U > N_rf:
        raise InfeasibleError(f"{U} users exceed {N_rf} RF chains")
    if beam_indices is not None:
        seen: Dict[int, int] = {}
        for u, l in enumerate(beam_indices):
            if l in seen:
                raise InfeasibleError(f"users {seen[l] + 1} and {u + 1} share AP beam {l}")
            seen[l] = u
    else:
        for u in range(U):
            for w in range(u):
                if np.allclose(beams[u], beams[w], atol=1e-12):
                    raise InfeasibleError(f"users {w + 1} and {u + 1} share an AP beam")
    owners = _column_owners(U, N_rf)
    return np.stack([beams[u] for u in owners], axis=1) / np.sqrt(N_rf)


def training_overhead(
    M_ap: int, N_rf: int, M_ue: int, M_sub: int, mode: ScenarioMode = "full"
) -> int:
    """Closed-form analog training transmissions per user."""
    sectors = M_ap // N_rf
    if mode == "full":
        return sectors * M_sub + M_sub + M_ue // M_sub + 1
    if mode == "single_user_exhaustive_sta":
        return sectors * M_ue + M_ue
    if mode == "single_antenna_sta":
        return sectors
    raise ConfigError(f"unknown scenario mode: {mode}")


def computational_cost(M_ap: int, N_rf: int, M_sub: int, K_tx: int, users: int = 1) -> int:
    """Dominant-term operation count of the stage-1 search: K_tx^2 (M_ap/N_rf) M_sub U."""
    return K_tx**2 * (M_ap // N_rf) * M_sub * users


def select_user(
    H: np.ndarray,
    books: CodebookSet,
    training: TrainingSignal,
    budget: LinkBudget,
    rng: np.random.Generator,
    path: EstimationPath = "waveform",
    user: int = 0,
    log: Optional[List[TransmissionRecord]] = None,
) -> UserSelection:
    """Run the stages of ``books.mode`` for one user on pilot-subcarrier matrices ``H``."""
    s1 = stage1_uplink(H, books, training, budget, rng, path, user, log)
    stage_objectives: Dict[str, np.ndarray] = {"stage1": s1.objectives}
    m_prime: Optional[int] = None
    n_prime: Optional[int] = None

    if books.mode == "full":
        assert books.sta_narrow is not None
        m_prime, stage_objectives["stage2"] = stage2_downlink(
            H, s1.P_star, books.sta_sector, training, budget, rng, path, user, log
        )
        n_prime, sta_index, g_star, stage_objectives["stage3"] = stage3_downlink(
            H, s1.P_star, m_prime, books.sta_narrow, training, budget, rng, path, user, log
        )
        count = s1.transmissions + len(stage_objectives["stage2"]) + len(stage_objectives["stage3"])
    elif books.mode == "single_user_exhaustive_sta":
        sta_index, objectives = _downlink_argmax(
            books.sta_base.vectors, H, s1.P_star, training, budget, rng, path
        )
        if log is not None:
            log.extend(
                TransmissionRecord(user, "exhaustive", 0, i + 1, 0, float(o)) for i, o in enumerate(objectives)
            )
        stage_objectives["exhaustive"] = objectives
        g_star = books.sta_base[sta_index]
        count = s1.transmissions + len(objectives)
    else:
        sta_index = 1
        g_star = books.sta_sector[0]
        count = s1.transmissions

    return UserSelection(
        user=user,
        ap_beam_index=s1.ap_beam_index,
        sta_beam_index=sta_index,
        p_star=s1.p_star,
        g_star=g_star,
        stage1=s1,
        m_prime_star=m_prime,
        n_prime_star=n_prime,
        stage_objectives=stage_objectives,
        training_count=count,
    )


def full_beam_selection(
    channel: ChannelTensor,
    books: CodebookSet,
    training: TrainingSignal,
    budget: LinkBudget,
    rng: np.random.Generator,
    path: EstimationPath = "waveform",
    keep_log: bool = False,
) -> BeamSelectionResult:
    """
    Beam selection for every user of ``channel``, independently.

    Only the pilot subcarriers of ``training`` are used; ``channel`` must
    contain them.
    """
    pilots = channel.restrict(training.pilots)
    if pilots.sta_antennas != books.M_ue or pilots.ap_antennas != books.M_ap:
        raise ConfigError(
            f"channel is {pilots.sta_antennas}x{pilots.ap_antennas}, codebooks expect {books.M_ue}x{books.M_ap}"
        )
    log: Optional[List[TransmissionRecord]] = [] if keep_log else None
    users = [
        select_user(pilots.matrices[u], books, training, budget, rng, path, u, log)
        for u in range(pilots.num_users)
    ]
    return BeamSelectionResult(users, books.mode, log or [])
