"""Kernel backend selection.

The compiled extension is used when importable; set ``GEOACKER_PURE_PYTHON=1``
to force the pure-Python fallback.
"""

import os
from types import ModuleType

from . import _pykernels

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS: dict[str, ModuleType] = {"python": _pykernels}
if _compiled is not None:
    BACKENDS["cython"] = _compiled

if _compiled is not None and os.environ.get("GEOACKER_PURE_PYTHON", "") in ("", "0"):
    default: ModuleType = _compiled
else:
    default = _pykernels


def get_backend(name: str | None = None) -> ModuleType:
    """Return the kernel module named ``name`` (``"cython"`` or ``"python"``), or the default."""
    if name is None:
        return default
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"kernel backend {name!r} unavailable; have {sorted(BACKENDS)}"
        ) from None
