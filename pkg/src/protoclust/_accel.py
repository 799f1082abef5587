"""Backend selection for the hot kernels.

Set ``PROTOCLUST_BACKEND=numpy`` to force the pure-numpy path.  The numba
path is used by default whenever numba imports cleanly.
"""
import os

BACKEND_ENV = "PROTOCLUST_BACKEND"

try:
    import numba
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f


def backend() -> str:
    """Return the active backend name, ``"numba"`` or ``"numpy"``.

    Read on every call so tests and benchmarks can flip the flag at runtime.
    """
    requested = os.environ.get(BACKEND_ENV, "numba").strip().lower()
    if requested not in ("numba", "numpy"):
        raise ValueError(f"{BACKEND_ENV} must be 'numba' or 'numpy', got {requested!r}")
    if requested == "numba" and not HAVE_NUMBA:
        return "numpy"
    return requested


def use_numba() -> bool:
    return backend() == "numba"
