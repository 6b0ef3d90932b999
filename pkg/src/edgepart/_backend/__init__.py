"""Kernel backend selection.

The compiled extension is preferred when importable; the pure-Python twin is
the fallback.  EDGEPART_BACKEND overrides the choice: "compiled" demands the
extension (ImportError if missing), "pure" forces the fallback, anything else
(or unset) means automatic.
"""

from __future__ import annotations

import os

from . import pure

MODE_ADAPTIVE = pure.MODE_ADAPTIVE
MODE_DOU = pure.MODE_DOU
MODE_DOE = pure.MODE_DOE

_choice = os.environ.get("EDGEPART_BACKEND", "auto").lower()

if _choice == "pure":
    impl = pure
    BACKEND_NAME = "pure"
else:
    try:
        from . import _solver_core as impl  # type: ignore[no-redef]

        BACKEND_NAME = "compiled"
    except ImportError:
        if _choice == "compiled":
            raise
        impl = pure
        BACKEND_NAME = "pure"


def backend_name() -> str:
    """Which kernel implementation is active: "compiled" or "pure"."""
    return BACKEND_NAME
