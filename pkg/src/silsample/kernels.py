"""Kernel backend selection.

Prefers the compiled extension, falls back to NumPy. Set SILSAMPLE_PURE_PYTHON=1
to force the fallback (useful for benchmarking and debugging).
"""

import os

if os.environ.get("SILSAMPLE_PURE_PYTHON"):
    from silsample import _pykernels as _impl
else:
    try:
        from silsample import _ckernels as _impl  # type: ignore[no-redef]
    except ImportError:
        from silsample import _pykernels as _impl  # type: ignore[no-redef]

BACKEND = _impl.BACKEND
nn1_indices = _impl.nn1_indices
knn_indices = _impl.knn_indices
pairwise_distances = _impl.pairwise_distances
class_distance_sums = _impl.class_distance_sums
