"""Integrator backend selection.

The compiled kernel is used when it was built; otherwise the numpy fallback.
Set ``SOFTNEAT_BACKEND=python`` to force the fallback.
"""
import os

from . import _kernel_py

try:
    from . import _kernel as _compiled
except ImportError:  # extension not built
    _compiled = None

COMPILED_AVAILABLE = _compiled is not None


def default_name():
    if os.environ.get("SOFTNEAT_BACKEND", "").lower() == "python" or not COMPILED_AVAILABLE:
        return "python"
    return "compiled"


def get(name=None):
    """Integrate function for backend ``name`` ('compiled', 'python' or None for default)."""
    name = name or default_name()
    if name == "python":
        return _kernel_py.integrate
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled kernel not built; reinstall with Cython available")
        return _compiled.integrate
    raise ValueError(f"unknown backend {name!r}")
