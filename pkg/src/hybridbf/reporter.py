"""
Plain-text artifacts of a run: results, pattern, codebook, transmission-log
and rate-report CSVs plus the run manifest.

Floats are written with ``repr`` so every CSV re-parses to the exact
double, and rows are emitted in a fixed order so identical inputs give
identical bytes.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Tuple

import numpy as np

from . import __version__
from .codebook import CodebookSet
from .config import RunConfig, config_hash
from .errors import HybridBfError
from .types import RealizationOutcome, SummaryRow, TransmissionRecord

logger = logging.getLogger(__name__)

RESULTS_COLUMNS = (
    "config_id",
    "snr_db",
    "realizations",
    "bser",
    "loss_db",
    "sum_rate_hybrid",
    "sum_rate_digital_bd",
    "excluded_count",
)
PATTERN_COLUMNS = ("theta_rad", "f_k_hz", "power_dbi")
CODEBOOK_COLUMNS = ("codebook_name", "index_m", "index_n", "element_index", "real", "imag")
LOG_COLUMNS = ("user", "stage", "ap_index", "sta_index", "chain", "objective")


def _fmt(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    logger.info("wrote %s", path)
    return path


def write_results_csv(rows: Sequence[SummaryRow], path: str | Path) -> Path:
    return _write_rows(
        Path(path), RESULTS_COLUMNS, ([getattr(r, c) for c in RESULTS_COLUMNS] for r in rows)
    )


def write_pattern_csv(theta: np.ndarray, f_k_hz: float, power_dbi: np.ndarray, path: str | Path) -> Path:
    """One pattern curve (one codeword at one subcarrier) on an angle grid."""
    if theta.shape != power_dbi.shape:
        raise HybridBfError(f"pattern has {power_dbi.shape} values for {theta.shape} angles")
    return _write_rows(
        Path(path), PATTERN_COLUMNS, ((t, float(f_k_hz), p) for t, p in zip(theta, power_dbi))
    )


def write_codebook_csv(books: CodebookSet, path: str | Path) -> Path:
    """Every codeword of every set; index_m/index_n/element_index are 1-based."""

    def rows():
        for name, words in books.named_sets():
            for m in range(words.shape[0]):
                for n in range(words.shape[1]):
                    for e, c in enumerate(words[m, n]):
                        yield name, m + 1, n + 1, e + 1, float(c.real), float(c.imag)

    return _write_rows(Path(path), CODEBOOK_COLUMNS, rows())


def read_codebook_csv(path: str | Path) -> Dict[str, np.ndarray]:
    """Re-parse a codebook CSV into arrays shaped (index_m, index_n, elements)."""
    entries: Dict[str, Dict[Tuple[int, int, int], complex]] = defaultdict(dict)
    with Path(path).open(encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        if tuple(reader.fieldnames or ()) != CODEBOOK_COLUMNS:
            raise HybridBfError(f"unexpected codebook columns: {reader.fieldnames}")
        for row in reader:
            key = (int(row["index_m"]), int(row["index_n"]), int(row["element_index"]))
            entries[row["codebook_name"]][key] = complex(float(row["real"]), float(row["imag"]))

    out: Dict[str, np.ndarray] = {}
    for name, cells in entries.items():
        shape = tuple(max(k[i] for k in cells) for i in range(3))
        words = np.zeros(shape, dtype=complex)
        for (m, n, e), c in cells.items():
            words[m - 1, n - 1, e - 1] = c
        out[name] = words
    return out


def write_transmission_log(records: Sequence[TransmissionRecord], path: str | Path) -> Path:
    return _write_rows(
        Path(path), LOG_COLUMNS, ([getattr(r, c) for c in LOG_COLUMNS] for r in records)
    )


def rate_report_rows(outcomes: Sequence[RealizationOutcome]) -> Tuple[List[str], List[List[Any]]]:
    """
    One row per SNR point: mean sum rates over noise draws, their ratio,
    BSER over draws, excluded draws and the mean per-user rates.
    """
    groups: Dict[float, List[RealizationOutcome]] = defaultdict(list)
    for o in outcomes:
        groups[o.snr_db].append(o)
    users = max((len(o.selected) for o in outcomes), default=0)
    header = [
        "snr_db",
        "noise_realizations",
        "sum_rate_hybrid",
        "sum_rate_digital_bd",
        "rate_ratio",
        "bser",
        "excluded_count",
    ] + [f"rate_user_{u + 1}" for u in range(users)]

    rows: List[List[Any]] = []
    nan = float("nan")
    for snr in sorted(groups):
        group = sorted(groups[snr], key=lambda o: o.index)
        kept = [o for o in group if not o.excluded and o.sum_rate_hybrid is not None]
        digital = [o.sum_rate_digital_bd for o in group if o.sum_rate_digital_bd is not None]
        hybrid = float(np.mean([o.sum_rate_hybrid for o in kept])) if kept else nan
        baseline = float(np.mean(digital)) if digital else nan
        ratio = hybrid / baseline if kept and digital and baseline > 0 else nan
        pairs = [(s, t) for o in group for s, t in zip(o.selected, o.optimal)]
        bser = sum(1 for s, t in pairs if s != t) / len(pairs) if pairs else nan
        per_user = (
            np.mean([o.per_user_rates for o in kept if o.per_user_rates is not None], axis=0)
            if kept
            else np.full(users, nan)
        )
        rows.append(
            [float(snr), len(group), hybrid, baseline, ratio, bser, len(group) - len(kept)]
            + [float(r) for r in per_user]
        )
    return header, rows


def write_rate_report(outcomes: Sequence[RealizationOutcome], path: str | Path) -> Path:
    header, rows = rate_report_rows(outcomes)
    return _write_rows(Path(path), header, rows)


def file_sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass
class RunManifest:
    config_hash: str
    code_version: str
    started_at: str
    finished_at: str
    command: str
    outputs: Dict[str, str] = field(default_factory=dict)  # file name -> sha256


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def write_manifest(
    cfg: RunConfig, command: str, outputs: Sequence[Path], started_at: str, out_dir: str | Path
) -> Path:
    """manifest.json next to the outputs; the config itself is archived as config.json."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    config_path = out_dir / "config.json"
    config_path.write_text(
        json.dumps(cfg.model_dump(mode="json"), sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    manifest = RunManifest(
        config_hash=config_hash(cfg),
        code_version=__version__,
        started_at=started_at,
        finished_at=utc_now(),
        command=command,
        outputs={p.name: file_sha256(p) for p in [*outputs, config_path]},
    )
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(asdict(manifest), indent=2) + "\n", encoding="utf-8")
    logger.info("wrote manifest %s (%d outputs)", path, len(manifest.outputs))
    return path


def write_ndjson(record: Dict[str, Any]) -> None:
    print(json.dumps(record, ensure_ascii=False))
