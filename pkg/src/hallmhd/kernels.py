"""Backend selection for the inner loops.

The compiled extension ``hallmhd._kernels`` is used when it imports; the
pure-numpy module ``hallmhd._kernels_py`` is the fallback. Setting
``HMHD_PURE_PYTHON=1`` forces the fallback (used by the benchmark and the
backend-equivalence tests).
"""

import os

from . import _kernels_py

if os.environ.get("HMHD_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:  # extension not built
        _impl = _kernels_py
        BACKEND = "python"

cross = _impl.cross
power_sum = _impl.power_sum
max_magnitude = _impl.max_magnitude
shell_energies = _impl.shell_energies


def thread_count():
    """Worker count for FFTs, capped by ``HMHD_THREADS``."""
    cap = os.environ.get("HMHD_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = max(1, min(n, int(cap)))
        except ValueError:
            pass
    return n
