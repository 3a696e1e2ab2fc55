"""Trial-loop kernel backends.

The compiled extension (_native, Cython) is preferred when present; the
pure-Python loop in _python is the fallback and the reference. Selection
happens at import and can be forced with the CLSE_BACKEND environment
variable ("native" or "python"). benchmarks/compare_backends.py times the
two against each other.
"""

import os

from . import _python

try:
    from . import _native
except ImportError:  # extension not built; pure Python still works
    _native = None

_BACKENDS = {"python": _python}
if _native is not None:
    _BACKENDS["native"] = _native


def available_backends():
    return sorted(_BACKENDS)


def get_backend(name=None):
    """Resolve a backend module by name, env var, or best available."""
    name = name or os.environ.get("CLSE_BACKEND")
    if name:
        try:
            return _BACKENDS[name]
        except KeyError:
            raise ValueError(
                f"unknown backend {name!r}; available: {available_backends()}"
            ) from None
    return _BACKENDS.get("native", _python)


DEFAULT_BACKEND = get_backend()
ALGO_IDS = _python.ALGO_IDS


def run_trial_kernel(algo_id, X, y, scenario, g, delta, dcd, backend=None):
    """Dispatch one trial loop to the selected backend."""
    mod = get_backend(backend) if isinstance(backend, (str, type(None))) else backend
    return mod.run_trial_kernel(algo_id, X, y, scenario, g, delta, dcd)
