"""Pure-Python kernel backend.

Reference implementation of the hot scoring kernels. The compiled backend
in ``_ckernels.pyx`` must produce bucket-identical embeddings, so the token
hash (FNV-1a, 64-bit, over UTF-8 bytes) is spelled out here rather than
delegated to Python's salted ``hash()``.
"""

from __future__ import annotations

import math

import numpy as np

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def token_bucket(token: str, dim: int) -> int:
    """Deterministic bucket index of ``token`` in a ``dim``-wide table."""
    h = _FNV_OFFSET
    for byte in token.encode("utf-8"):
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h % dim


def accumulate_tf(tokens: list[str], out: np.ndarray) -> None:
    """Add one count per token into its hash bucket of ``out`` (in place)."""
    dim = out.shape[0]
    for token in tokens:
        out[token_bucket(token, dim)] += 1.0


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    if a.shape != b.shape:
        raise ValueError("cosine: shape mismatch")
    na = float(np.dot(a, a))
    nb = float(np.dot(b, b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine undefined for zero-norm vector")
    return float(np.dot(a, b)) / math.sqrt(na * nb)
