"""Trigram-similarity kernels: compiled extension with pure-Python fallback.

The compiled backend is selected automatically when the extension built;
set ``CLARFORGE_PURE_KERNELS=1`` to force the pure backend (used by the
parity tests and the benchmark).  Both backends are bit-identical.
"""

import os

from clarforge.kernels import pure as _pure

if os.environ.get("CLARFORGE_PURE_KERNELS") == "1":
    _impl = _pure
else:
    try:
        from clarforge.kernels import _trigram as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _pure

BACKEND: str = _impl.BACKEND
DIM: int = _pure.DIM

trigram_counts = _impl.trigram_counts
similarity = _impl.similarity
pair_scores = _impl.pair_scores
unit_vector = _impl.unit_vector

__all__ = [
    "BACKEND",
    "DIM",
    "trigram_counts",
    "similarity",
    "pair_scores",
    "unit_vector",
]
