"""Kernel backend selection.

The compiled extension is preferred when it imported cleanly; the numpy
backend is the fallback.  Set LOADCAST_BACKEND=python to force the fallback
or LOADCAST_BACKEND=compiled to insist on the extension (raises if absent).
Both backends expose the same functions over 2-D C-contiguous float64 arrays;
see numpy_backend for the reference semantics.
"""

import os

from . import numpy_backend

_choice = os.environ.get("LOADCAST_BACKEND", "").strip().lower()

if _choice in ("python", "numpy"):
    backend = numpy_backend
elif _choice == "compiled":
    from . import _core as backend
else:
    try:
        from . import _core as backend
    except ImportError:
        backend = numpy_backend

BACKEND_NAME = backend.NAME


def available_backends():
    names = [numpy_backend.NAME]
    try:
        from . import _core
    except ImportError:
        pass
    else:
        names.append(_core.NAME)
    return names


def get_backend(name):
    if name == "numpy":
        return numpy_backend
    if name == "compiled":
        from . import _core
        return _core
    raise ValueError(f"unknown backend {name!r}")
