"""Kernel backend selection.

The compiled extension is used when importable. Setting the environment
variable ``RYDLADDER_PURE_PYTHON=1`` forces the numpy fallback.
"""

import os

from . import _fallback

if os.environ.get("RYDLADDER_PURE_PYTHON", "") not in ("", "0"):
    _impl = _fallback
    BACKEND = "numpy"
else:
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _fallback
        BACKEND = "numpy"

enumerate_states = _impl.enumerate_states
flip_connections = _impl.flip_connections
permute_states = _impl.permute_states
lookup = _impl.lookup

__all__ = ["BACKEND", "enumerate_states", "flip_connections", "permute_states", "lookup"]
