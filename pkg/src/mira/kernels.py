"""Kernel dispatch: compiled extension when built, pure Python otherwise.

Set MIRA_PURE_PYTHON=1 to force the fallback (used by the benchmark and by
tests that cross-check both backends).
"""

import os

import numpy as np

from . import _lcs

if os.environ.get("MIRA_PURE_PYTHON"):
    _impl = None
else:
    try:
        from . import _speedups as _impl
    except ImportError:
        _impl = None

BACKEND = "cython" if _impl is not None else "python"


if _impl is not None:

    def lcs_length(a, b) -> int:
        return _impl.lcs_length(
            np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)
        )

else:
    lcs_length = _lcs.lcs_length
