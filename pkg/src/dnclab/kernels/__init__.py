"""Kernel backend selection.

The compiled extension is preferred when present; ``DNCLAB_BACKEND`` forces a
choice (``compiled``/``cy`` or ``python``/``py``).  Both backends expose the
same functions with identical semantics; see ``reference.py`` for the
definitions.
"""

import os

from . import reference

_choice = os.environ.get("DNCLAB_BACKEND", "auto").lower()

if _choice in ("python", "py"):
    _impl = reference
    BACKEND = "python"
elif _choice in ("auto", "compiled", "cy"):
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        if _choice != "auto":
            raise
        _impl = reference
        BACKEND = "python"
else:
    raise ValueError(f"unknown DNCLAB_BACKEND value: {_choice!r}")

EPS_NORM = reference.EPS_NORM
DEGENERATE_NORM = reference.DEGENERATE_NORM

sigmoid_fwd = _impl.sigmoid_fwd
sigmoid_bwd = _impl.sigmoid_bwd
tanh_fwd = _impl.tanh_fwd
tanh_bwd = _impl.tanh_bwd
oneplus_fwd = _impl.oneplus_fwd
oneplus_bwd = _impl.oneplus_bwd
softmax_fwd = _impl.softmax_fwd
softmax_bwd = _impl.softmax_bwd
cosine_slots_fwd = _impl.cosine_slots_fwd
cosine_slots_bwd = _impl.cosine_slots_bwd
allocation_fwd = _impl.allocation_fwd
allocation_bwd = _impl.allocation_bwd
link_fwd = _impl.link_fwd
link_bwd = _impl.link_bwd
erase_write_fwd = _impl.erase_write_fwd
erase_write_bwd = _impl.erase_write_bwd
