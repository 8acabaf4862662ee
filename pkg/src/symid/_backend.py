"""Selects the recursion kernel backend at import time.

The compiled extension is used when present; otherwise (or when
SYMID_PURE_PYTHON is set in the environment) the numpy fallback is used.
Both expose simulate / gradient_core / sensitivity with identical contracts.
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("SYMID_PURE_PYTHON"):
    kernels = _kernels_py
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]
    except ImportError:
        kernels = _kernels_py

HAVE_COMPILED_KERNELS: bool = bool(getattr(kernels, "COMPILED", False))


def get_kernels(name: str | None = None):
    """Return a kernel module by name: 'compiled', 'python', or the default."""
    if name is None:
        return kernels
    if name == "python":
        return _kernels_py
    if name == "compiled":
        from . import _kernels  # raises ImportError when not built

        return _kernels
    raise ValueError(f"unknown backend {name!r}")
