"""
Monte Carlo pipeline: channel draw, beam selection, digital precoding and
per-realization metrics.

Every realization owns its random streams, derived from
(master_seed, realization_index), so results do not depend on the worker
count or on scheduling. Within a realization the channel and training
sequences are shared by all SNR points and only the noise differs.
"""

from __future__ import annotations

import concurrent.futures
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .beamselect import build_analog_matrix, full_beam_selection
from .channel import HEADER_SIZE, generate_channel_tensor
from .codebook import CodebookSet, build_codebooks
from .config import RunConfig
from .digital import (
    bd_baseline_gains,
    bd_precoder,
    estimate_equivalent_channels,
    expand_to_subcarriers,
    genie_precoder,
    rates_from_gains,
)
from .errors import ChannelFormatError, InfeasibleError
from .metrics.oracle import objective_grid
from .metrics.rate_metric import achievable_sum_rate
from .signal import gen_training, pilot_indices
from .types import (
    ArrayGeometry,
    BeamSelectionResult,
    ChannelConfig,
    ChannelTensor,
    FrequencyGrid,
    LinkBudget,
    RealizationOutcome,
    TrainingSignal,
    TransmissionRecord,
)

logger = logging.getLogger(__name__)

_CHANNEL_STREAM = 0


def realization_rng(seed: int, index: int, stream: int = _CHANNEL_STREAM) -> np.random.Generator:
    """Independent generator for (seed, realization, stream); stream 0 draws the channel."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index, stream)))


@dataclass(frozen=True, eq=False)
class Scenario:
    """Everything derived once from a RunConfig and shared read-only by workers."""

    cfg: RunConfig
    books: CodebookSet
    grid: FrequencyGrid
    ap_array: ArrayGeometry
    sta_array: ArrayGeometry
    channel: ChannelConfig
    pilots: np.ndarray

    @classmethod
    def from_config(cls, cfg: RunConfig) -> "Scenario":
        books = build_codebooks(cfg.ap_antennas, cfg.rf_chains, cfg.sta_antennas, cfg.sta_subarray, cfg.mode)
        sta_elements = 1 if cfg.mode == "single_antenna_sta" else cfg.sta_antennas
        return cls(
            cfg=cfg,
            books=books,
            grid=cfg.frequency_grid(),
            ap_array=cfg.ap_geometry(),
            sta_array=ArrayGeometry(sta_elements, cfg.spacing_normalized, cfg.reference_frequency_hz),
            channel=ChannelConfig(
                num_paths=cfg.num_paths,
                power_profile_db=tuple(cfg.path_powers_db),
                coupling_amplitude=cfg.coupling,
                normalize=cfg.normalize_paths,
            ),
            pilots=pilot_indices(cfg.num_subcarriers, cfg.num_pilots),
        )


def _snr_stream(snr_position: int) -> int:
    return 1 + snr_position


def _evaluate_snr(
    scenario: Scenario,
    channel: ChannelTensor,
    training: TrainingSignal,
    oracle_grids: np.ndarray,
    index: int,
    snr_db: float,
    rng: np.random.Generator,
    bd_gains: Optional[np.ndarray],
) -> RealizationOutcome:
    cfg = scenario.cfg
    budget = cfg.budget(snr_db)
    selection = full_beam_selection(channel, scenario.books, training, budget, rng, cfg.estimation)

    selected, optimal, achieved, best = [], [], [], []
    for sel, grid in zip(selection.users, oracle_grids):
        selected.append((sel.ap_beam_index, sel.sta_beam_index))
        a, s = np.unravel_index(int(np.argmax(grid)), grid.shape)
        optimal.append((int(a) + 1, int(s) + 1))
        achieved.append(float(grid[sel.ap_beam_index - 1, sel.sta_beam_index - 1]))
        best.append(float(grid[a, s]))

    outcome = dict(
        index=index,
        snr_db=float(snr_db),
        selected=tuple(selected),
        optimal=tuple(optimal),
        achieved_objective=tuple(achieved),
        optimal_objective=tuple(best),
        training_count=selection.training_count,
    )
    if bd_gains is None:
        return RealizationOutcome(**outcome)

    digital = float(rates_from_gains(bd_gains, budget.total_power, cfg.num_subcarriers, budget.noise_variance).mean(axis=1).sum())
    try:
        hybrid, per_user = _hybrid_rate(scenario, channel, training, selection, budget, rng)
    except InfeasibleError as e:
        logger.warning("realization %d snr=%.1f excluded: %s", index, snr_db, e)
        return RealizationOutcome(**outcome, sum_rate_digital_bd=digital, excluded=True, diagnosis=str(e))
    return RealizationOutcome(
        **outcome,
        sum_rate_hybrid=hybrid,
        sum_rate_digital_bd=digital,
        per_user_rates=tuple(float(r) for r in per_user),
    )


def _hybrid_rate(
    scenario: Scenario,
    channel: ChannelTensor,
    training: TrainingSignal,
    selection: BeamSelectionResult,
    budget: LinkBudget,
    rng: np.random.Generator,
) -> Tuple[float, np.ndarray]:
    cfg = scenario.cfg
    P_an = build_analog_matrix(
        [sel.p_star for sel in selection.users],
        cfg.rf_chains,
        [sel.ap_beam_index for sel in selection.users],
    )
    g_users = np.stack([sel.g_star for sel in selection.users])
    if cfg.genie_csi:
        precoder = genie_precoder(channel, P_an, g_users, budget.total_power)
    else:
        eq = estimate_equivalent_channels(channel, P_an, g_users, training, budget, rng, cfg.estimation)
        precoder = bd_precoder(expand_to_subcarriers(eq, channel.subcarriers), P_an, budget.total_power)
    report = achievable_sum_rate(
        channel.matrices, g_users, P_an, precoder.matrices, budget.total_power, budget.noise_variance, cfg.num_subcarriers
    )
    if report.excluded:
        raise InfeasibleError("analog matrix rank below the number of users")
    return report.sum_rate, report.per_user


def draw_realization(scenario: Scenario, index: int, full_band: bool):
    """Channel tensor (pilots only unless ``full_band``), path sets and training for one realization."""
    cfg = scenario.cfg
    rng = realization_rng(cfg.seed, index)
    subcarriers = None if full_band else scenario.pilots
    channel, paths = generate_channel_tensor(
        rng, scenario.channel, cfg.users, scenario.grid, scenario.ap_array, scenario.sta_array, subcarriers
    )
    training = gen_training(rng, scenario.pilots, cfg.training_length, cfg.training_share)
    return channel, paths, training


def _oracle_grids(scenario: Scenario, channel: ChannelTensor) -> np.ndarray:
    """Objective grids per user, on the pilots or on every subcarrier ``channel`` holds."""
    held = channel.restrict(scenario.pilots) if scenario.cfg.oracle_band == "pilots" else channel
    return np.stack(
        [
            objective_grid(held.matrices[u], scenario.books.ap_base.vectors, scenario.books.sta_base.vectors)
            for u in range(held.num_users)
        ]
    )


def simulate_realization(
    scenario: Scenario, index: int, snr_db: Sequence[float], with_rates: bool
) -> List[RealizationOutcome]:
    """All SNR points of one realization (paired: same channel, fresh noise per SNR)."""
    full_band = with_rates or scenario.cfg.oracle_band == "full"
    channel, _, training = draw_realization(scenario, index, full_band)
    grids = _oracle_grids(scenario, channel)
    gains = bd_baseline_gains(channel.matrices) if with_rates else None
    outcomes = []
    for pos, snr in enumerate(snr_db):
        rng = realization_rng(scenario.cfg.seed, index, _snr_stream(pos))
        outcomes.append(_evaluate_snr(scenario, channel, training, grids, index, snr, rng, gains))
    return outcomes


def run_montecarlo(
    cfg: RunConfig,
    realizations: Optional[int] = None,
    snr_db: Optional[Sequence[float]] = None,
    workers: Optional[int] = None,
) -> List[RealizationOutcome]:
    """
    Run the sweep and return outcomes ordered by realization, then SNR.

    Rates are computed for the first ``rate_realizations`` realizations
    when ``compute_rates`` is set.
    """
    scenario = Scenario.from_config(cfg)
    n = realizations or cfg.realizations
    grid = list(snr_db or cfg.snr_db)
    rate_limit = cfg.rate_realizations if cfg.compute_rates else 0
    pool = workers or cfg.workers
    logger.info(
        "montecarlo start: %d realizations, %d SNR points, mode=%s, workers=%d", n, len(grid), cfg.mode, pool
    )

    def task(i: int) -> List[RealizationOutcome]:
        return simulate_realization(scenario, i, grid, i < rate_limit)

    results: List[RealizationOutcome] = []
    with concurrent.futures.ThreadPoolExecutor(max_workers=pool) as executor:
        # map preserves submission order, so reduction is in realization order
        for i, batch in enumerate(executor.map(task, range(n))):
            results.extend(batch)
            if (i + 1) % max(1, n // 10) == 0:
                logger.info("montecarlo progress: %d/%d", i + 1, n)
    return results


def evaluate_channel_tensor(
    cfg: RunConfig,
    tensor: ChannelTensor,
    noise_realizations: Optional[int] = None,
    snr_db: Optional[Sequence[float]] = None,
    workers: Optional[int] = None,
) -> List[RealizationOutcome]:
    """
    Beam selection, BD precoding and rates on a supplied full-band tensor,
    repeated over independent noise draws at every SNR point.
    """
    scenario = Scenario.from_config(cfg)
    if tensor.sta_antennas != scenario.books.M_ue or tensor.ap_antennas != scenario.books.M_ap:
        raise ChannelFormatError(
            f"channel is {tensor.sta_antennas}x{tensor.ap_antennas}, configuration expects "
            f"{scenario.books.M_ue}x{scenario.books.M_ap}",
            HEADER_SIZE - 8,
        )
    n = noise_realizations or cfg.rate_realizations
    grid = list(snr_db or cfg.snr_db)
    training = gen_training(realization_rng(cfg.seed, 0), scenario.pilots, cfg.training_length, cfg.training_share)
    grids = _oracle_grids(scenario, tensor)
    gains = bd_baseline_gains(tensor.matrices) if cfg.compute_rates else None

    def task(i: int) -> List[RealizationOutcome]:
        return [
            _evaluate_snr(scenario, tensor, training, grids, i, snr, realization_rng(cfg.seed, i, _snr_stream(pos)), gains)
            for pos, snr in enumerate(grid)
        ]

    results: List[RealizationOutcome] = []
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers or cfg.workers) as executor:
        for batch in executor.map(task, range(n)):
            results.extend(batch)
    logger.info("channel evaluation done: %d noise draws x %d SNR points", n, len(grid))
    return results


def transmission_log(cfg: RunConfig, index: int = 0, snr_db: Optional[float] = None) -> List[TransmissionRecord]:
    """Per-transmission training log of one realization at one SNR point."""
    scenario = Scenario.from_config(cfg)
    snr = cfg.snr_db[-1] if snr_db is None else snr_db
    channel, _, training = draw_realization(scenario, index, full_band=False)
    rng = realization_rng(cfg.seed, index, _snr_stream(0))
    result = full_beam_selection(channel, scenario.books, training, cfg.budget(snr), rng, cfg.estimation, keep_log=True)
    return result.log
