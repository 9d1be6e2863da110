"""Kernel backend selection.

Imports the compiled extension when available, otherwise the numpy
fallback. Set ``SNELLMC_PURE_PYTHON=1`` to force the fallback (used by the
benchmark and the backend-agreement tests).
"""

import os

if os.environ.get("SNELLMC_PURE_PYTHON"):
    from . import _kernels_py as _impl

    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        from . import _kernels_py as _impl

        BACKEND = "python"

gbm_paths = _impl.gbm_paths
hn_paths = _impl.hn_paths
hn_loglik = _impl.hn_loglik
lmm_paths = _impl.lmm_paths
crr_values = _impl.crr_values
