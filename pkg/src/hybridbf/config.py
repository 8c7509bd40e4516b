"""
Run configuration: every simulation parameter in one validated pydantic model.

Defaults follow the standard simulation table (60 GHz reference, 512
subcarriers, 16-element arrays, 4 RF chains).
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from . import settings
from .errors import ConfigError
from .types import (
    ArrayGeometry,
    CouplingModel,
    ElementPattern,
    FrequencyGrid,
    LinkBudget,
)


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    # carrier and OFDM grid
    reference_frequency_hz: float = 60e9
    center_frequency_hz: float = 58.32e9
    subcarrier_spacing_hz: float = 5.15625e6
    num_subcarriers: int = 512
    num_pilots: int = 16
    training_length: int = 64

    # arrays
    ap_antennas: int = 16
    sta_antennas: int = 16
    sta_subarray: int = 8
    rf_chains: int = 4
    spacing_normalized: float = 0.5

    # channel
    users: int = 1
    num_paths: int = 1
    path_powers_db: List[float] = Field(default_factory=lambda: [0.0])
    normalize_paths: bool = True
    coupling_amplitude: float = 0.1
    coupling_phase_rad: float = 0.0

    # sweep
    snr_db: List[float] = Field(default_factory=lambda: [float(s) for s in range(-10, 45, 5)])
    realizations: int = 10_000
    rate_realizations: int = 200
    seed: int = 0
    mode: Literal["full", "single_user_exhaustive_sta", "single_antenna_sta"] = "full"
    estimation: Literal["waveform", "projected"] = "waveform"
    compute_rates: bool = True
    genie_csi: bool = False
    # "pilots": training energy rho is shared by the K_tx pilot subcarriers only
    training_power: Literal["pilots", "band"] = "pilots"
    # subcarriers the exhaustive optimum is scored on
    oracle_band: Literal["full", "pilots"] = "full"

    # runtime
    output_dir: str = "results"
    workers: int = Field(default_factory=lambda: settings.DEFAULT_WORKERS)
    angle_grid_points: int = Field(default_factory=lambda: settings.ANGLE_GRID_POINTS)

    @model_validator(mode="after")
    def _check_constraints(self) -> "RunConfig":
        problems = collect_diagnostics(self)
        if problems:
            raise ValueError("; ".join(problems))
        return self

    # Derived domain objects

    @property
    def coupling(self) -> complex:
        return complex(self.coupling_amplitude * np.exp(1j * self.coupling_phase_rad))

    @property
    def pilot_subcarriers(self) -> np.ndarray:
        from .signal import pilot_indices

        return pilot_indices(self.num_subcarriers, self.num_pilots)

    @property
    def training_share(self) -> int:
        """Number of subcarriers sharing the training power, the K in sqrt(rho/K)."""
        return self.num_pilots if self.training_power == "pilots" else self.num_subcarriers

    def frequency_grid(self) -> FrequencyGrid:
        return FrequencyGrid(
            self.center_frequency_hz, self.subcarrier_spacing_hz, self.num_subcarriers
        )

    def ap_geometry(self) -> ArrayGeometry:
        return ArrayGeometry(self.ap_antennas, self.spacing_normalized, self.reference_frequency_hz)

    def sta_geometry(self) -> ArrayGeometry:
        return ArrayGeometry(self.sta_antennas, self.spacing_normalized, self.reference_frequency_hz)

    def element_pattern(self) -> ElementPattern:
        return ElementPattern()

    def coupling_model(self) -> CouplingModel:
        return CouplingModel(self.coupling)

    def budget(self, snr_db: float) -> LinkBudget:
        # rho is fixed to 1 and the noise variance carries the SNR
        return LinkBudget.from_snr_db(snr_db, total_power=1.0)


def collect_diagnostics(cfg: RunConfig) -> List[str]:
    """Every violated constraint as a named diagnostic; empty when valid."""
    out: List[str] = []

    positive = {
        "reference_frequency_hz": cfg.reference_frequency_hz,
        "subcarrier_spacing_hz": cfg.subcarrier_spacing_hz,
        "spacing_normalized": cfg.spacing_normalized,
    }
    for name, value in positive.items():
        if value <= 0:
            out.append(f"{name}: must be > 0 (got {value})")

    at_least_one = {
        "num_subcarriers": cfg.num_subcarriers,
        "num_pilots": cfg.num_pilots,
        "training_length": cfg.training_length,
        "ap_antennas": cfg.ap_antennas,
        "sta_antennas": cfg.sta_antennas,
        "sta_subarray": cfg.sta_subarray,
        "rf_chains": cfg.rf_chains,
        "users": cfg.users,
        "num_paths": cfg.num_paths,
        "realizations": cfg.realizations,
        "rate_realizations": cfg.rate_realizations,
        "workers": cfg.workers,
        "angle_grid_points": cfg.angle_grid_points,
    }
    for name, value in at_least_one.items():
        if value < 1:
            out.append(f"{name}: must be >= 1 (got {value})")
    if out:
        return out

    if cfg.num_pilots > cfg.num_subcarriers:
        out.append(
            f"num_pilots: must not exceed num_subcarriers ({cfg.num_pilots} > {cfg.num_subcarriers})"
        )
    lowest = cfg.center_frequency_hz - (cfg.num_subcarriers // 2) * cfg.subcarrier_spacing_hz
    if lowest <= 0:
        out.append("center_frequency_hz: lowest subcarrier frequency must be > 0")
    if cfg.ap_antennas % cfg.rf_chains:
        out.append(
            f"rf_chains: must divide ap_antennas ({cfg.ap_antennas} % {cfg.rf_chains} != 0)"
        )
    if cfg.mode == "full":
        ratio, rem = divmod(cfg.sta_antennas, cfg.sta_subarray)
        if rem or ratio < 2 or ratio % 2:
            out.append(
                "sta_subarray: sta_antennas/sta_subarray must be a positive even integer "
                f"(got {cfg.sta_antennas}/{cfg.sta_subarray})"
            )
    if cfg.users > cfg.rf_chains:
        out.append(f"users: must not exceed rf_chains ({cfg.users} > {cfg.rf_chains})")
    if cfg.mode != "full" and cfg.users != 1:
        out.append(f"users: mode {cfg.mode} is single-user (got {cfg.users})")
    if len(cfg.path_powers_db) != cfg.num_paths:
        out.append(
            f"path_powers_db: length must equal num_paths ({len(cfg.path_powers_db)} != {cfg.num_paths})"
        )
    if not 0 <= cfg.coupling_amplitude < 1:
        out.append(f"coupling_amplitude: must lie in [0, 1) (got {cfg.coupling_amplitude})")
    if not cfg.snr_db:
        out.append("snr_db: at least one SNR point is required")
    if cfg.seed < 0:
        out.append(f"seed: must be >= 0 (got {cfg.seed})")
    return out


def load_config(path: Optional[str | Path] = None, **overrides: Any) -> RunConfig:
    """Load a JSON config file (or defaults) and apply non-None overrides."""
    data: Dict[str, Any] = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError as e:
            raise ConfigError(f"config: file not found: {path}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"config: invalid JSON at line {e.lineno}: {e.msg}") from e
        if not isinstance(data, dict):
            raise ConfigError("config: top-level JSON value must be an object")
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig(**data)
    except ValidationError as e:
        raise ConfigError(_flatten(e)) from e


def _flatten(err: ValidationError) -> List[str]:
    out: List[str] = []
    for item in err.errors():
        loc = ".".join(str(p) for p in item.get("loc", ()))
        msg = item.get("msg", "invalid value")
        if msg.startswith("Value error, "):
            # model-level diagnostics arrive joined; split them back out
            out.extend(msg[len("Value error, "):].split("; "))
        else:
            out.append(f"{loc}: {msg}" if loc else msg)
    return out


# runtime knobs that cannot change any result
_UNHASHED = {"workers", "output_dir"}


def config_hash(cfg: RunConfig) -> str:
    canonical = json.dumps(cfg.model_dump(mode="json", exclude=_UNHASHED), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def parse_snr_range(text: str) -> List[float]:
    """Parse ``start:step:stop`` (inclusive stop) into a list of dB values."""
    try:
        start, step, stop = (float(p) for p in text.split(":"))
    except ValueError as e:
        raise ConfigError(f"snr_db: expected start:step:stop, got {text!r}") from e
    if step == 0 or (stop - start) / step < 0:
        raise ConfigError(f"snr_db: range {text!r} is empty")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [float(start + i * step) for i in range(count)]
