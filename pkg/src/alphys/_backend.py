"""Selects the compiled kernels when available.

Set ``ALPHYS_PURE_PYTHON=1`` to force the pure-Python fallback.
"""

import os

from . import _pykernels

python = _pykernels
compiled = None

if not os.environ.get("ALPHYS_PURE_PYTHON"):
    try:
        from . import _kernels as compiled
    except ImportError:  # extension not built
        compiled = None

kernels = compiled if compiled is not None else python
name = "cython" if compiled is not None else "python"


def available():
    """Mapping of backend name to kernel module for every importable backend."""
    out = {"python": python}
    if compiled is not None:
        out["cython"] = compiled
    return out
