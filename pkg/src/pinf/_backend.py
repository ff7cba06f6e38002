"""Kernel backend selection.

The compiled extension (`pinf._kernels`) is preferred; the pure-Python twin
(`pinf._kernels_py`) is the fallback. `PINF_BACKEND=pure|compiled` forces a
choice (forcing `compiled` raises if the extension is missing). Both backends
are bit-identical, so selection never changes results, only speed.
"""

from __future__ import annotations

import os

from . import _kernels_py

_FORCED = os.environ.get("PINF_BACKEND", "auto").lower()

if _FORCED == "pure":
    kernels = _kernels_py
    BACKEND = "pure"
elif _FORCED == "compiled":
    from . import _kernels  # raises ImportError if the extension is absent

    kernels = _kernels
    BACKEND = "compiled"
else:
    try:
        from . import _kernels

        kernels = _kernels
        BACKEND = "compiled"
    except ImportError:
        kernels = _kernels_py
        BACKEND = "pure"


def backend_name() -> str:
    return BACKEND


def get_backend(name: str):
    """Fetch a specific backend module (for parity tests and benchmarks)."""
    if name == "pure":
        return _kernels_py
    if name == "compiled":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")


def available_backends() -> list[str]:
    names = ["pure"]
    try:
        from . import _kernels  # noqa: F401

        names.append("compiled")
    except ImportError:
        pass
    return names
