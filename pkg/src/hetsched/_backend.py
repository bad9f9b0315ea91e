"""Select the event-loop implementation at import time.

The compiled kernel is used when it was built; ``HETSCHED_PURE_PYTHON=1``
forces the pure-Python reference.
"""

import os

from . import _kernel_py

try:
    from . import _kernel as _kernel_c
except ImportError:  # extension not built
    _kernel_c = None

KERNELS = {"python": _kernel_py.run_chunk}
if _kernel_c is not None:
    KERNELS["cython"] = _kernel_c.run_chunk

if os.environ.get("HETSCHED_PURE_PYTHON") == "1" or _kernel_c is None:
    DEFAULT = "python"
else:
    DEFAULT = "cython"


def get_kernel(name=None):
    name = DEFAULT if name is None else name
    try:
        return KERNELS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} is not available") from None
