"""Backend selection for the paired-run kernel.

The compiled extension is preferred when importable; the pure-Python twin is
the fallback. Set SOCIALRL_BACKEND=python or SOCIALRL_BACKEND=compiled to
force one (forcing "compiled" raises if the extension is missing).
"""

from __future__ import annotations

import os

from .errors import ConfigurationError
from . import _purepy


def _select():
    choice = os.environ.get("SOCIALRL_BACKEND", "auto").lower()
    if choice not in ("auto", "compiled", "python"):
        raise ConfigurationError(f"SOCIALRL_BACKEND must be auto, compiled or python, got {choice!r}")
    if choice == "python":
        return _purepy
    try:
        from . import _core
        return _core
    except ImportError:
        if choice == "compiled":
            raise ConfigurationError("compiled kernel requested but the extension is not built")
        return _purepy


_impl = _select()
BACKEND = _impl.BACKEND
run_paired_core = _impl.run_paired_core


def get_backend(name: str):
    """Fetch a specific kernel module (used by the parity tests and the
    benchmark); name is "python" or "compiled"."""
    if name == "python":
        return _purepy
    if name == "compiled":
        from . import _core
        return _core
    raise ConfigurationError(f"unknown backend {name!r}")
