"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The backend is fixed at import time from ``HOLOFIX_NUMBA``; both backends are
importable directly (``numpy_backend`` always, ``numba_backend`` when numba is
installed) so benchmarks and tests can compare them side by side.
"""

from .._config import NUMBA_REQUESTED
from . import _numpy as numpy_backend

try:
    from . import _numba as numba_backend
except ImportError:  # numba missing or broken
    numba_backend = None

if NUMBA_REQUESTED and numba_backend is not None:
    _active = numba_backend
    BACKEND = "numba"
else:
    _active = numpy_backend
    BACKEND = "numpy"

poly_eval_batch = _active.poly_eval_batch
aberth = _active.aberth
ball_objective_batch = _active.ball_objective_batch
sphere_descent = _active.sphere_descent

__all__ = [
    "BACKEND",
    "aberth",
    "ball_objective_batch",
    "numba_backend",
    "numpy_backend",
    "poly_eval_batch",
    "sphere_descent",
]
