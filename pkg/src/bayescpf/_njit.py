"""Numba shim: compiled kernels by default, pure NumPy/Python fallback on demand.

Set ``BAYESCPF_DISABLE_NUMBA=1`` in the environment (before import) to run every
kernel uninstrumented in the interpreter. Both paths execute the same source,
so results are identical; only speed differs. ``benchmarks/backend_bench.py``
measures the gap.
"""

import os

_FLAG = os.environ.get("BAYESCPF_DISABLE_NUMBA", "").strip().lower()
_DISABLED = _FLAG in ("1", "true", "yes", "on")

NUMBA_ENABLED = False

if not _DISABLED:
    try:
        from numba import njit as _numba_njit

        NUMBA_ENABLED = True
    except ImportError:
        pass

if NUMBA_ENABLED:

    def njit(*args, **kwargs):
        kwargs.setdefault("cache", True)
        return _numba_njit(*args, **kwargs)

else:

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def decorate(func):
            return func

        return decorate
