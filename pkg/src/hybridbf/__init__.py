"""Link-level simulator for multiuser wideband mmWave hybrid beamforming."""

__version__ = "0.1.0"
