"""
Shared configuration for the desk-scale acceptance runs.

These runs take minutes; select them explicitly with
``pytest tests/integration -m slow``.
"""

import os

import pytest

from hybridbf.config import RunConfig

WORKERS = int(os.getenv("HBF_TEST_WORKERS", str(os.cpu_count() or 1)))


@pytest.fixture(scope="session")
def desk_config():
    """Standard-table run with the fast estimation path and the host's cores."""

    def make(**overrides):
        base = dict(estimation="projected", workers=WORKERS, compute_rates=False)
        base.update(overrides)
        return RunConfig(**base)

    return make
