import functools
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Callable, List, Optional, Tuple

import numpy as np
import typer

from .aggregate import summarize_sweep
from .array import angle_grid, coupling_matrix, power_dbi, radiation_pattern, subcarrier_frequency
from .beamselect import computational_cost, training_overhead
from .channel import load_channel_file
from .codebook import build_codebooks, orthogonal_beamformer
from .config import RunConfig, config_hash, load_config, parse_snr_range
from .errors import HybridBfError, error_payload
from .reporter import (
    utc_now,
    write_codebook_csv,
    write_manifest,
    write_ndjson,
    write_pattern_csv,
    write_rate_report,
    write_results_csv,
    write_transmission_log,
)
from .simulation import evaluate_channel_tensor, run_montecarlo, transmission_log
from .types import ArrayGeometry

app = typer.Typer(
    name="hybridbf",
    help="Multiuser wideband mmWave hybrid beamforming simulator.",
    no_args_is_help=True,
    add_completion=False,
)

CONFIG_OPT = typer.Option(None, "--config", help="JSON run configuration")
SEED_OPT = typer.Option(None, "--seed", min=0, help="master seed")
SNR_OPT = typer.Option(None, "--snr-db", help="SNR grid start:step:stop in dB")
OUT_OPT = typer.Option(None, "--out", help="output directory")
WORKERS_OPT = typer.Option(None, "--workers", min=1, help="worker threads")


# LOG_LEVEL: 0 silent, 1 info, 2 debug; anything else is silent
_LOG_LEVELS = {0: logging.CRITICAL + 1, 1: logging.INFO, 2: logging.DEBUG}
_LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

logger = logging.getLogger(__name__)


def setup_logging() -> logging.Logger:
    """Configure the ``hybridbf`` package logger from LOG_LEVEL and LOG_FILE."""
    try:
        level = _LOG_LEVELS.get(int(os.environ.get("LOG_LEVEL", "0")), logging.CRITICAL + 1)
    except ValueError:
        level = logging.CRITICAL + 1

    package_logger = logging.getLogger(__package__ or "hybridbf")
    for old in list(package_logger.handlers):
        package_logger.removeHandler(old)
        old.close()
    package_logger.setLevel(level)
    package_logger.propagate = False

    log_file = os.environ.get("LOG_FILE")
    if log_file:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        handler: logging.Handler = logging.FileHandler(log_path, encoding="utf-8")
    else:
        handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(_LOG_FORMAT))
    handler.setLevel(level)
    package_logger.addHandler(handler)
    return package_logger


def handles_errors(fn: Callable[..., Any]) -> Callable[..., Any]:
    """Turn simulator errors into a JSON payload on stderr and the mapped exit code."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except HybridBfError as e:
            code, payload = error_payload(e)
            logger.error("%s: %s", payload["error"], payload["message"])
            typer.echo(json.dumps(payload), err=True)
            raise typer.Exit(code) from e

    return wrapper


def _load(
    config: Optional[Path],
    seed: Optional[int] = None,
    realizations: Optional[int] = None,
    snr_db: Optional[str] = None,
    out: Optional[Path] = None,
    workers: Optional[int] = None,
) -> RunConfig:
    return load_config(
        config,
        seed=seed,
        realizations=realizations,
        snr_db=parse_snr_range(snr_db) if snr_db else None,
        output_dir=str(out) if out else None,
        workers=workers,
    )


def resolve_codeword(cfg: RunConfig, selector: str) -> Tuple[str, ArrayGeometry, np.ndarray]:
    """
    ``<set>:<m>[:<n>]`` over the dumped codebook sets, or ``b<M>:<m>`` for
    b_m(M) on an M-element array. Returns (label, geometry, codeword).
    """
    parts = selector.split(":")
    try:
        name, idx = parts[0], [int(p) for p in parts[1:]]
    except ValueError as e:
        raise typer.BadParameter(f"indices must be integers: {selector!r}") from e
    if not 1 <= len(idx) <= 2 or any(i < 1 for i in idx):
        raise typer.BadParameter(f"expected <set>:<m>[:<n>] with 1-based indices, got {selector!r}")
    m, n = idx[0], idx[1] if len(idx) == 2 else 1

    if name.startswith("b") and name[1:].isdigit():
        M = int(name[1:])
        if M < 1 or m > M or len(idx) != 1:
            raise typer.BadParameter(f"{selector!r}: b<M>:<m> needs 1 <= m <= M")
        geom = ArrayGeometry(M, cfg.spacing_normalized, cfg.reference_frequency_hz)
        return f"b{M}_m{m}", geom, orthogonal_beamformer(M, m).coefficients

    books = build_codebooks(cfg.ap_antennas, cfg.rf_chains, cfg.sta_antennas, cfg.sta_subarray, cfg.mode)
    sets = dict(books.named_sets())
    if name not in sets:
        raise typer.BadParameter(f"unknown codebook {name!r}; choose from {', '.join(sets)} or b<M>")
    words = sets[name]
    if m > words.shape[0] or n > words.shape[1]:
        raise typer.BadParameter(f"{selector!r}: {name} has indices up to {words.shape[0]}:{words.shape[1]}")
    word = words[m - 1, n - 1]
    geom = ArrayGeometry(len(word), cfg.spacing_normalized, cfg.reference_frequency_hz)
    return f"{name}_m{m}_n{n}", geom, word


def _subcarrier_list(cfg: RunConfig, text: Optional[str]) -> List[Tuple[str, float]]:
    """Comma list of 1-based subcarriers; ``f0`` is the reference frequency. Default: lowest and highest."""
    grid = cfg.frequency_grid()
    tokens = text.split(",") if text else ["1", str(cfg.num_subcarriers)]
    out = []
    for tok in (t.strip() for t in tokens):
        if tok == "f0":
            out.append(("f0", cfg.reference_frequency_hz))
        elif tok.isdigit():
            out.append((f"k{int(tok)}", float(subcarrier_frequency(grid, int(tok)))))
        else:
            raise typer.BadParameter(f"bad subcarrier {tok!r}")
    return out


@app.callback()
def main():
    setup_logging()


@app.command()
@handles_errors
def pattern(
    select: List[str] = typer.Option(..., "--select", help="codeword selector, repeatable"),
    subcarriers: Optional[str] = typer.Option(None, "--subcarriers", help="e.g. 1,512,f0"),
    isotropic: bool = typer.Option(False, "--isotropic", help="array factor only"),
    no_coupling: bool = typer.Option(False, "--no-coupling"),
    config: Optional[Path] = CONFIG_OPT,
    out: Optional[Path] = OUT_OPT,
):
    """Radiation-pattern CSVs, one per (codeword, subcarrier)."""
    started = utc_now()
    cfg = _load(config, out=out)
    theta = angle_grid(cfg.angle_grid_points)
    element = None if isotropic else cfg.element_pattern()
    outputs = []
    for sel in select:
        label, geom, word = resolve_codeword(cfg, sel)
        for tag, f_k in _subcarrier_list(cfg, subcarriers):
            S = None if no_coupling else coupling_matrix(geom, cfg.coupling_model(), f_k)
            psi = radiation_pattern(geom, S, word, f_k, theta, element)
            path = Path(cfg.output_dir) / f"pattern_{label}_{tag}.csv"
            outputs.append(write_pattern_csv(theta, f_k, power_dbi(psi), path))
    write_manifest(cfg, "pattern", outputs, started, cfg.output_dir)


@app.command()
@handles_errors
def codebook(config: Optional[Path] = CONFIG_OPT, out: Optional[Path] = OUT_OPT):
    """Dump every codeword of the configured scenario."""
    started = utc_now()
    cfg = _load(config, out=out)
    books = build_codebooks(cfg.ap_antennas, cfg.rf_chains, cfg.sta_antennas, cfg.sta_subarray, cfg.mode)
    path = write_codebook_csv(books, Path(cfg.output_dir) / "codebook.csv")
    write_manifest(cfg, "codebook", [path], started, cfg.output_dir)


@app.command()
@handles_errors
def montecarlo(
    config: Optional[Path] = CONFIG_OPT,
    seed: Optional[int] = SEED_OPT,
    realizations: Optional[int] = typer.Option(None, "--realizations", min=1),
    snr_db: Optional[str] = SNR_OPT,
    out: Optional[Path] = OUT_OPT,
    workers: Optional[int] = WORKERS_OPT,
    log_transmissions: bool = typer.Option(False, "--log-transmissions", help="also write realization 0's training log"),
):
    """BSER, misalignment loss and sum rates over the SNR grid."""
    started = utc_now()
    cfg = _load(config, seed, realizations, snr_db, out, workers)
    outcomes = run_montecarlo(cfg)
    rows = summarize_sweep(config_hash(cfg)[:12], outcomes)
    outputs = [write_results_csv(rows, Path(cfg.output_dir) / "results.csv")]
    if log_transmissions:
        outputs.append(write_transmission_log(transmission_log(cfg), Path(cfg.output_dir) / "transmissions.csv"))
    write_manifest(cfg, "montecarlo", outputs, started, cfg.output_dir)


@app.command("evaluate-channel-file")
@handles_errors
def evaluate_channel_file(
    channel_file: Path = typer.Argument(..., help="MMWCH1 channel tensor"),
    config: Optional[Path] = CONFIG_OPT,
    seed: Optional[int] = SEED_OPT,
    realizations: Optional[int] = typer.Option(None, "--realizations", min=1, help="noise draws per SNR"),
    snr_db: Optional[str] = SNR_OPT,
    out: Optional[Path] = OUT_OPT,
    workers: Optional[int] = WORKERS_OPT,
):
    """Beam selection, BD precoding and rates on a supplied channel tensor."""
    started = utc_now()
    cfg = _load(config, seed, None, snr_db, out, workers)
    M_ue = 1 if cfg.mode == "single_antenna_sta" else cfg.sta_antennas
    tensor = load_channel_file(channel_file, (cfg.users, cfg.num_subcarriers, M_ue, cfg.ap_antennas))
    outcomes = evaluate_channel_tensor(cfg, tensor, noise_realizations=realizations)
    path = write_rate_report(outcomes, Path(cfg.output_dir) / "rate_report.csv")
    write_manifest(cfg, "evaluate-channel-file", [path], started, cfg.output_dir)


def _stage1_sta_beams(cfg: RunConfig) -> int:
    return {"full": cfg.sta_subarray, "single_user_exhaustive_sta": cfg.sta_antennas}.get(cfg.mode, 1)


@app.command()
@handles_errors
def overhead(config: Optional[Path] = CONFIG_OPT):
    """Training transmissions per user and stage-1 operation count, as one JSON line."""
    cfg = _load(config)
    write_ndjson(
        {
            "mode": cfg.mode,
            "ap_antennas": cfg.ap_antennas,
            "sta_antennas": cfg.sta_antennas,
            "sta_subarray": cfg.sta_subarray,
            "rf_chains": cfg.rf_chains,
            "transmissions_per_user": training_overhead(
                cfg.ap_antennas, cfg.rf_chains, cfg.sta_antennas, cfg.sta_subarray, cfg.mode
            ),
            "users": cfg.users,
            "stage1_operations": computational_cost(
                cfg.ap_antennas, cfg.rf_chains, _stage1_sta_beams(cfg), cfg.num_pilots, cfg.users
            ),
        }
    )


if __name__ == "__main__":
    sys.exit(app())
