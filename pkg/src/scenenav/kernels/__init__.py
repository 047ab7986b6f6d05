"""Kernel backend selection.

The hot numeric loops (point binning, grid gradients, lidar ray casting,
trajectory scoring) exist twice: a numba @njit build in ``jit`` and a
pure-numpy build in ``ref``. The numba build is used when importable;
set ``SCENENAV_NO_NUMBA=1`` to force the numpy fallback. Both backends
implement identical semantics; ``benchmarks/bench_kernels.py`` times and
cross-checks them.
"""

import os

if os.environ.get("SCENENAV_NO_NUMBA", "0") not in ("", "0"):
    from . import ref as active
else:
    try:
        from . import jit as active
    except ImportError:  # numba missing: quietly fall back
        from . import ref as active

from . import ref  # noqa: F401  (always importable; oracle twin)

scatter_max = active.scatter_max
scatter_sum = active.scatter_sum
gradient = active.gradient
heightfield = active.heightfield
raycast = active.raycast
score_samples = active.score_samples


def backend_name():
    """Name of the selected backend: 'numba' or 'numpy'."""
    return active.BACKEND
