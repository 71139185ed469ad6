"""Kernel backend selection.

Two interchangeable backends provide the hot sampling loops:

* ``pure``    -- numpy reference implementation, always available.
* ``_native`` -- Cython extension linked against numpy's random C API.

The native backend is picked when importable.  Set the environment
variable ``BANDWATCH_KERNELS`` to ``pure`` or ``native`` to force a
choice; forcing ``native`` when the extension is missing raises at
import time.  Both backends consume the RNG stream identically, so
results never depend on the selection.
"""

from __future__ import annotations

import os

from . import pure as _pure

_choice = os.environ.get("BANDWATCH_KERNELS", "auto")
if _choice not in ("auto", "pure", "native"):
    raise ImportError(
        f"BANDWATCH_KERNELS must be 'auto', 'pure' or 'native', got {_choice!r}"
    )

if _choice == "pure":
    _impl = _pure
else:
    try:
        from . import _native as _impl
    except ImportError:
        if _choice == "native":
            raise
        _impl = _pure

sample_row = _impl.sample_row
mc_matrix = _impl.mc_matrix
BACKEND: str = _impl.NAME


def backend_name() -> str:
    """Name of the active kernel backend (``"pure"`` or ``"native"``)."""
    return BACKEND
