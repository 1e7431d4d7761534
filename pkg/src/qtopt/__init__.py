"""JPEG luminance quantization-table search toolkit.

Subpackages: qtable (table domain), codec (baseline JPEG path), iqa
(full-reference metrics and ratios), annealer (simulated annealing core),
harness (multi-run orchestration), cli (command line).
"""

__version__ = "0.1.0"

from ._accel import BACKEND, NUMBA_ENABLED  # noqa: F401
