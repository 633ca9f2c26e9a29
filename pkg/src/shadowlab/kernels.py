"""Kernel backend selection.

Imports the compiled extension when present, otherwise the pure numpy
implementation. ``SHADOWLAB_PURE=1`` in the environment forces the fallback
(used by the benchmark to compare both backends on one install).
"""

import os

if os.environ.get("SHADOWLAB_PURE"):
    from . import _core_pure as _impl
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _core_pure as _impl

BACKEND = _impl.BACKEND
opt_lambda_residuals = _impl.opt_lambda_residuals
sup_residuals = _impl.sup_residuals
certified_lows = _impl.certified_lows


def backend_name():
    """Name of the active kernel backend ("compiled" or "pure")."""
    return BACKEND
