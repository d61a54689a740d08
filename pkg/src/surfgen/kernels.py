"""Select the compiled kernels when available, else the numpy fallback.

Set ``SURFGEN_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("SURFGEN_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        pass

log_softmax_scores = _impl.log_softmax_scores
iis_expectations = _impl.iis_expectations
