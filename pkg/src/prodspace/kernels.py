"""Kernel backend selection.

The compiled extension is preferred; set ``PRODSPACE_KERNELS=python`` to force
the numpy fallback.
"""

import os

from prodspace import _pykernels

BACKEND = "python"
cooccurrence = _pykernels.cooccurrence
density_matrix = _pykernels.density_matrix

if os.environ.get("PRODSPACE_KERNELS", "").lower() != "python":
    try:
        from prodspace import _ckernels
    except ImportError:
        _ckernels = None
    else:
        BACKEND = "compiled"
        cooccurrence = _ckernels.cooccurrence
        density_matrix = _ckernels.density_matrix


def backends():
    """Map of available backend name -> module (for benchmarks and tests)."""
    out = {"python": _pykernels}
    try:
        from prodspace import _ckernels as ck
    except ImportError:
        return out
    out["compiled"] = ck
    return out
