"""Worker-count control for the threaded batch drivers.

Results never depend on the worker count: grid accumulation is split
over a fixed batch partition and merged by exact integer summation, and
all other batch outputs are written to disjoint per-trajectory slots.
"""

import os

import numba

from .errors import ConfigError

ENV_WORKERS = "BOHMQUBITS_WORKERS"


def resolve_workers(workers=None):
    """Effective worker count: explicit arg, else env override, else all.

    The BOHMQUBITS_WORKERS environment variable is consulted when no
    explicit count is given.  The result is clamped to the number of
    threads the runtime actually has.
    """
    if workers is None:
        raw = os.environ.get(ENV_WORKERS)
        if raw is not None and raw.strip():
            try:
                workers = int(raw)
            except ValueError:
                raise ConfigError(
                    f"{ENV_WORKERS} must be an integer, got {raw!r}")
    ceiling = numba.config.NUMBA_NUM_THREADS
    if workers is None:
        return ceiling
    if workers < 1:
        raise ConfigError(f"worker count must be >= 1, got {workers}")
    return min(workers, ceiling)


def apply_workers(workers=None):
    """Resolve and install the worker count; returns what was applied."""
    n = resolve_workers(workers)
    numba.set_num_threads(n)
    return n
