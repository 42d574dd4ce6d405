"""Kernel backend selection.

The compiled extension is preferred when importable; the pure-Python
module is the fallback. CAD_KERNELS=pure|compiled|auto overrides the
choice (auto is the default). Both backends are kept importable side by
side so tests and benchmarks can compare them directly.
"""

import os

from . import pure

try:
    from . import _compiled as compiled
except ImportError:
    compiled = None


def _select():
    choice = os.environ.get("CAD_KERNELS", "auto").strip().lower()
    if choice in ("", "auto"):
        return compiled if compiled is not None else pure
    if choice == "compiled":
        if compiled is None:
            raise ImportError(
                "CAD_KERNELS=compiled but the compiled kernel extension is "
                "not built; reinstall the package or use CAD_KERNELS=pure"
            )
        return compiled
    if choice == "pure":
        return pure
    raise ImportError(f"CAD_KERNELS must be auto, compiled, or pure, not {choice!r}")


impl = _select()
BACKEND = impl.BACKEND

grow_region = impl.grow_region
anchor_means = impl.anchor_means
directed_min_distances = impl.directed_min_distances
