"""Kernel backend selection.

The compiled extension is used when importable; set ``CATNET_PURE_PYTHON=1``
to force the numpy fallback.  ``BACKEND`` names the active implementation.
"""

import os

from catnet import _kernels_py as python_backend

compiled_backend = None
if os.environ.get("CATNET_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from catnet import _kernels as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

_active = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "cython" if compiled_backend is not None else "python"

brute_order = _active.brute_order
held_karp_order = _active.held_karp_order
# stage combination is memory-bound; the vectorized numpy version measures
# faster than the compiled row loop (see benchmarks/bench_kernels.py)
combine_stages_batch = python_backend.combine_stages_batch
