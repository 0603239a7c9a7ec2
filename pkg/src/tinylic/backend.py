"""Compute-backend selection.

The hot kernels exist twice: a numba ``@njit`` implementation and a pure
numpy one. Both are written against the same fixed floating-point
evaluation order and call the same libm scalar functions, so they produce
bit-identical results; the choice is purely about speed.

Selection happens once at import time via the ``TINYLIC_BACKEND``
environment variable:

* ``auto`` (default) - numba when importable, else numpy
* ``numba``          - require numba, error if missing
* ``numpy``          - force the pure-numpy fallback
"""

import os

from .errors import ConfigError

_requested = os.environ.get("TINYLIC_BACKEND", "auto").strip().lower()
if _requested not in ("auto", "numba", "numpy"):
    raise ConfigError(
        f"TINYLIC_BACKEND must be 'auto', 'numba' or 'numpy', got {_requested!r}"
    )

try:
    import numba  # noqa: F401

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False

if _requested == "numba" and not HAS_NUMBA:
    raise ConfigError("TINYLIC_BACKEND=numba but numba is not installed")

USE_NUMBA = _requested == "numba" or (_requested == "auto" and HAS_NUMBA)

#: Name of the active backend, "numba" or "numpy".
BACKEND = "numba" if USE_NUMBA else "numpy"
