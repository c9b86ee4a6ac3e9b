"""Kernel backend selection.

The compiled extension is used when it was built; otherwise the pure-Python
twin is loaded. Set ``ORA_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

BACKEND: str

if os.environ.get("ORA_PURE_PYTHON"):
    from . import _kernels_py as _impl

    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        from . import _kernels_py as _impl

        BACKEND = "python"

linear_episode = _impl.linear_episode
menu_dp = _impl.menu_dp

MODES = {"robust": 0, "omd": 1, "roa": 2, "static": 3}
