"""
Optional JIT compilation.

Kernels in this package are written as plain loops over numpy arrays and
decorated with ``njit``. When numba is installed they are compiled; without
it the decorator is a no-op and the same code runs in the interpreter.
"""

import logging

logger = logging.getLogger(__name__)

try:
    from numba import njit
    HAS_NUMBA = True
except ImportError:  # pragma: no cover - depends on the environment
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        """Fallback decorator used when numba is not installed."""
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def decorator(func):
            return func

        return decorator

    logger.warning("numba is not installed; spatial queries and entropy decoding run unaccelerated")
