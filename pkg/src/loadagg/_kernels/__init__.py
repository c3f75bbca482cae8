"""Hot-loop kernels, compiled when available.

The Cython extension is used if it was built; otherwise (or when the
``LOADAGG_PURE`` environment variable is set to ``1``) the numpy versions
are used.  ``BACKEND`` names the active implementation.
"""
import os

from . import _pykernels as pure

compiled = None
if os.environ.get("LOADAGG_PURE", "") != "1":
    try:
        from . import _ckernels as compiled
    except ImportError:  # extension not built
        compiled = None

_impl = compiled if compiled is not None else pure
BACKEND = "cython" if compiled is not None else "numpy"

apen_counts = _impl.apen_counts
level_splits = _impl.level_splits
smo = _impl.smo

__all__ = ["BACKEND", "apen_counts", "level_splits", "smo", "pure", "compiled"]
