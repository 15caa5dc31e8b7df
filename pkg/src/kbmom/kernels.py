"""Backend selection for the block kernels.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``KBMOM_BACKEND`` is set to ``python``, the numpy
fallback is used. Both expose ``assign``, ``block_update``, ``block_seed``
and ``block_lloyd`` with identical signatures.
"""

import os

from . import _kernels_py

fallback = _kernels_py

if os.environ.get("KBMOM_BACKEND", "").lower() == "python":
    compiled = None
else:
    try:
        from . import _kernels as compiled
    except ImportError:
        compiled = None

_impl = compiled if compiled is not None else fallback

BACKEND = _impl.BACKEND
assign = _impl.assign
block_update = _impl.block_update
block_seed = _impl.block_seed
block_lloyd = _impl.block_lloyd
