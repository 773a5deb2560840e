"""Hot-path kernels with a compiled core and a pure-Python fallback.

The compiled extension is picked automatically when present; set
SILENTLINK_KERNELS=pure to force the fallback (used by the benchmark
and the backend-equivalence tests).
"""

import os

from . import pure as _pure

if os.environ.get("SILENTLINK_KERNELS", "").lower() == "pure":
    _impl = _pure
else:
    try:
        from . import _native as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _pure

BACKEND = _impl.BACKEND
crc16 = _impl.crc16
env_window_flags = _impl.env_window_flags
cv_bank_step = _impl.cv_bank_step


def get_backend(name: str):
    """Return the named backend module ("pure" or "native")."""
    if name == "pure":
        return _pure
    if name == "native":
        from . import _native

        return _native
    raise ValueError(f"unknown kernel backend: {name!r}")
