"""
Process-level defaults for the simulator.
All values are overridable via environment variables.
"""

import os

# Uniform angle grid over [0, pi) used for pattern argmax and pattern export
ANGLE_GRID_POINTS = int(os.getenv("HBF_ANGLE_GRID_POINTS", "2048"))

# Relative singular-value threshold for rank and null-space decisions
RANK_RTOL = float(os.getenv("HBF_RANK_RTOL", "1e-10"))

# Worker pool size when neither the config nor the CLI sets one
DEFAULT_WORKERS = int(os.getenv("HBF_DEFAULT_WORKERS", "1"))

# Tolerance on beamformer power-constraint checks
NORM_TOL = float(os.getenv("HBF_NORM_TOL", "1e-9"))
