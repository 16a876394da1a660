# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel backend: FNV-1a token hashing, TF accumulation, cosine.

Must stay bucket-identical to ``_pykernels``; the test suite compares both.
"""

from libc.math cimport sqrt


cdef unsigned long long _FNV_OFFSET = 14695981039346656037ULL
cdef unsigned long long _FNV_PRIME = 1099511628211ULL


cdef inline unsigned long long _fnv1a(const unsigned char* data, Py_ssize_t n) noexcept nogil:
    cdef unsigned long long h = _FNV_OFFSET
    cdef Py_ssize_t i
    for i in range(n):
        h ^= data[i]
        h *= _FNV_PRIME
    return h


def token_bucket(str token, Py_ssize_t dim):
    """Deterministic bucket index of ``token`` in a ``dim``-wide table."""
    cdef bytes raw = token.encode("utf-8")
    cdef const unsigned char* p = raw
    return _fnv1a(p, len(raw)) % <unsigned long long> dim


def accumulate_tf(list tokens, double[::1] out):
    """Add one count per token into its hash bucket of ``out`` (in place)."""
    cdef Py_ssize_t dim = out.shape[0]
    cdef bytes raw
    cdef const unsigned char* p
    for token in tokens:
        raw = (<str> token).encode("utf-8")
        p = raw
        out[_fnv1a(p, len(raw)) % <unsigned long long> dim] += 1.0


def cosine(double[::1] a, double[::1] b):
    if a.shape[0] != b.shape[0]:
        raise ValueError("cosine: shape mismatch")
    cdef double dot = 0.0, na = 0.0, nb = 0.0
    cdef Py_ssize_t i
    for i in range(a.shape[0]):
        dot += a[i] * b[i]
        na += a[i] * a[i]
        nb += b[i] * b[i]
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine undefined for zero-norm vector")
    return dot / sqrt(na * nb)
