"""Hot scoring kernels with a compiled core and a pure-Python fallback.

Every SERP triggers a document/subtopic similarity sweep (10 results x all
subtopics), which makes hashing + cosine the innermost loop of the live
service. The Cython extension is preferred when it was built; otherwise the
pure-Python backend takes over transparently.

``SEARCHSCAFFOLD_KERNELS=py`` forces the fallback, ``=c`` insists on the
compiled extension (import fails if it is missing). ``benchmarks/`` holds a
script comparing the two.
"""

from __future__ import annotations

import os

import numpy as np

from . import _pykernels

_choice = os.environ.get("SEARCHSCAFFOLD_KERNELS", "").strip().lower()
if _choice not in ("", "c", "py"):
    raise ImportError(f"SEARCHSCAFFOLD_KERNELS must be 'c' or 'py', got {_choice!r}")

if _choice == "py":
    _backend = _pykernels
    BACKEND = "py"
else:
    try:
        from . import _ckernels as _backend  # type: ignore[no-redef]

        BACKEND = "c"
    except ImportError:
        if _choice == "c":
            raise
        _backend = _pykernels
        BACKEND = "py"


def backend_module(name: str):
    """Explicit backend lookup, used by tests and the benchmark."""
    if name == "py":
        return _pykernels
    if name == "c":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")


def token_bucket(token: str, dim: int) -> int:
    return _backend.token_bucket(token, dim)


def hashed_tf(tokens, dim: int) -> np.ndarray:
    """Feature-hashed term-frequency vector of length ``dim``."""
    out = np.zeros(dim, dtype=np.float64)
    _backend.accumulate_tf(list(tokens), out)
    return out


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine of two vectors; raises ValueError on a zero-norm operand."""
    return _backend.cosine(a, b)
