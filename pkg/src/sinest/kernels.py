"""Kernel backend selection.

The compiled extension is used when importable; setting the environment
variable ``SINEST_PURE_PYTHON=1`` forces the numpy fallback.
"""

import os

from . import _fallback

BACKEND = "python"
_impl = _fallback

if os.environ.get("SINEST_PURE_PYTHON", "") in ("", "0"):
    try:
        from . import _core as _impl  # noqa: F811

        BACKEND = "compiled"
    except ImportError:  # extension not built
        _impl = _fallback

fit = _impl.fit
cost_grad = _impl.cost_grad
grid_search = _impl.grid_search
