"""Kernel backend selection.

The compiled extension is used when importable; setting
``STOCHCUT_BACKEND=python`` forces the pure-Python fallback.
"""

import logging
import os

log = logging.getLogger(__name__)


def _select():
    wanted = os.environ.get("STOCHCUT_BACKEND", "auto").lower()
    if wanted not in ("auto", "c", "python"):
        raise ImportError(f"unknown STOCHCUT_BACKEND {wanted!r}")
    if wanted != "python":
        try:
            from . import _ckernels
            return _ckernels, "cython"
        except ImportError:
            if wanted == "c":
                raise
            log.debug("compiled kernels unavailable, using pure-Python fallback")
    from . import _pykernels
    return _pykernels, "python"


kernels, BACKEND = _select()


def python_kernels():
    from . import _pykernels
    return _pykernels


def compiled_kernels():
    """The compiled module, or ``None`` when it was not built."""
    try:
        from . import _ckernels
    except ImportError:
        return None
    return _ckernels
