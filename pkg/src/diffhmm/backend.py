"""Kernel backend selection.

The compiled extension is preferred when importable; the pure-numpy
fallback is always available.  ``DIFFHMM_BACKEND=python|compiled`` in the
environment, or an explicit name passed to :func:`get_backend`, overrides
the default.
"""

from __future__ import annotations

import os

from . import _kernel_py
from .errors import InvalidInputError

try:
    from . import _kernel
except ImportError:  # extension not built; numpy fallback carries the load
    _kernel = None

_BACKENDS = {"python": _kernel_py}
if _kernel is not None:
    _BACKENDS["compiled"] = _kernel


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def default_backend_name() -> str:
    env = os.environ.get("DIFFHMM_BACKEND")
    if env:
        if env not in _BACKENDS:
            raise InvalidInputError(
                f"DIFFHMM_BACKEND={env!r} not available; have {available_backends()}"
            )
        return env
    return "compiled" if _kernel is not None else "python"


def get_backend(name: str | None = None):
    """Return the kernel module for ``name`` (default: best available)."""
    if name is None:
        name = default_backend_name()
    try:
        return _BACKENDS[name]
    except KeyError:
        raise InvalidInputError(
            f"unknown backend {name!r}; have {available_backends()}"
        ) from None
