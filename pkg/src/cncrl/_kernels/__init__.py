"""Hot-kernel backend selection.

The compiled extension (`cncrl._kernels._core`, built by setup.py) is
picked when importable; otherwise the pure-Python twin takes over.  Set
CNCRL_FORCE_PURE=1 to force the fallback, e.g. for benchmarking.
"""

from __future__ import annotations

import os

from . import pure

if os.environ.get("CNCRL_FORCE_PURE"):
    _impl = pure
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = pure

BACKEND = _impl.BACKEND
simulate_chain = _impl.simulate_chain
sad_block_logscores = _impl.sad_block_logscores
LzTrieSet = _impl.LzTrieSet


def backend_name() -> str:
    return BACKEND
