"""Kernel backend selection.

Hot numeric kernels (tree edit distance, exact t-SNE) ship in two variants:
a numba ``@njit`` loop version and a pure-numpy fallback.  The active variant
is chosen once at import time from the ``MISCOVER_BACKEND`` environment
variable:

* ``MISCOVER_BACKEND=numba`` (default): use numba when importable, else fall
  back to numpy with a warning.
* ``MISCOVER_BACKEND=numpy``: force the pure-numpy path.

Both variants of every kernel stay importable so the benchmark suite can time
them side by side regardless of the active backend.
"""

from __future__ import annotations

import logging
import os

log = logging.getLogger("miscover")

_requested = os.environ.get("MISCOVER_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise RuntimeError(
        f"MISCOVER_BACKEND must be 'numba' or 'numpy', got {_requested!r}"
    )

NUMBA_ENABLED = False
if _requested == "numba":
    try:
        import numba  # noqa: F401

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - exercised only without numba
        log.warning("numba not importable; falling back to the numpy backend")


def backend_name() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"
