"""Kernel backend selection.

The compiled extension is preferred when importable; CALF_PURE_PYTHON=1
forces the pure fallback. Both expose aggregate_shapley with identical
semantics and identical floating-point results.
"""
from __future__ import annotations

import os

if os.environ.get("CALF_PURE_PYTHON") == "1":
    from .pure import aggregate_shapley

    BACKEND = "pure"
else:
    try:
        from ._shapley_c import aggregate_shapley  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        from .pure import aggregate_shapley  # type: ignore[no-redef]

        BACKEND = "pure"

__all__ = ["aggregate_shapley", "BACKEND"]
