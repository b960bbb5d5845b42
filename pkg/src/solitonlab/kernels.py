"""Kernel backend selection.

The compiled extension is preferred when it imported cleanly; the numpy
implementation is the fallback.  Set SOLITONLAB_KERNELS=python to force the
fallback (used by the benchmark and by backend-parity tests).
"""

import os

from . import _kernels_py

if os.environ.get("SOLITONLAB_KERNELS", "").lower() == "python":
    _impl = _kernels_py
else:
    try:
        from . import _kernels_cy as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_py

qn_profile = _impl.qn_profile
qn_profile_gradient = _impl.qn_profile_gradient
BACKEND_NAME = _impl.BACKEND_NAME


def available_backends():
    """Name -> module map of the kernel implementations importable here."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels_cy

        out["cython"] = _kernels_cy
    except ImportError:
        pass
    return out
