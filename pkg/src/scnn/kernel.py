"""Backend selection for the matrix-cycle kernel.

The compiled extension is used when it imports; otherwise the numpy
implementation is used. ``SCNN_BACKEND=python`` or ``=cython`` forces a
choice (forcing ``cython`` without a built extension raises ImportError).
"""

from __future__ import annotations

import os

from . import _kernel_py

try:
    from . import _kernel as _kernel_c
except ImportError:  # extension not built
    _kernel_c = None

BACKENDS = {"python": _kernel_py}
if _kernel_c is not None:
    BACKENDS["cython"] = _kernel_c


def get_backend(name: str | None = None):
    name = name or os.environ.get("SCNN_BACKEND") or None
    if name is None:
        return _kernel_c if _kernel_c is not None else _kernel_py
    if name not in ("python", "cython"):
        raise ValueError(f"unknown backend {name!r}")
    if name not in BACKENDS:
        raise ImportError("compiled kernel is not built; run `pip install -e .`")
    return BACKENDS[name]


DEFAULT_BACKEND = get_backend().NAME
