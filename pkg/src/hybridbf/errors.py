from __future__ import annotations

from typing import Any, Dict, Iterable, Tuple


class HybridBfError(Exception):
    """Base class for every error raised by the simulator."""

    exit_code = 1


class ConfigError(HybridBfError, ValueError):
    exit_code = 2

    def __init__(self, diagnostics: Iterable[str] | str):
        if isinstance(diagnostics, str):
            diagnostics = [diagnostics]
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics) or "invalid configuration")


class ChannelFormatError(HybridBfError):
    exit_code = 3

    def __init__(self, message: str, byte_offset: int = 0):
        self.byte_offset = byte_offset
        super().__init__(f"{message} (byte offset {byte_offset})")


class InfeasibleError(HybridBfError):
    """Simultaneous service of all users is not possible for this realization."""

    exit_code = 4

    def __init__(self, diagnosis: str):
        self.diagnosis = diagnosis
        super().__init__(diagnosis)


class ShapeError(HybridBfError, ValueError):
    pass


class CodebookIndexError(HybridBfError, IndexError):
    pass


class ContractError(HybridBfError):
    """A beamformer violates its power constraint."""


class EstimationError(HybridBfError, ZeroDivisionError):
    pass


class PairingError(HybridBfError, ValueError):
    pass


def error_payload(exc: BaseException) -> Tuple[int, Dict[str, Any]]:
    code = getattr(exc, "exit_code", 1) or 1
    payload: Dict[str, Any] = {
        "error": exc.__class__.__name__,
        "message": str(exc) or "Something went wrong",
    }
    if isinstance(exc, ConfigError):
        payload["diagnostics"] = exc.diagnostics
    if isinstance(exc, ChannelFormatError):
        payload["byte_offset"] = exc.byte_offset
    return int(code), payload
