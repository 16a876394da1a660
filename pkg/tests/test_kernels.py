import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from searchscaffold import kernels

def _has_c():
    try:
        kernels.backend_module("c")
        return True
    except ImportError:
        return False


BACKENDS = ["py"] + (["c"] if _has_c() else [])

tokens_st = st.lists(st.text(min_size=1, max_size=12), min_size=0, max_size=40)


def test_fnv1a_known_vector_py():
    # FNV-1a 64-bit of "a" is 0xaf63dc4c8601ec8c (published test vector)
    assert kernels.backend_module("py").token_bucket("a", 2**64) == 0xAF63DC4C8601EC8C


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("dim", [256, 4096])
def test_fnv1a_known_vector_buckets(backend, dim):
    mod = kernels.backend_module(backend)
    assert mod.token_bucket("a", dim) == 0xAF63DC4C8601EC8C % dim


@given(tokens=tokens_st, dim=st.sampled_from([8, 64, 256]))
def test_backends_agree(tokens, dim):
    if len(BACKENDS) < 2:
        pytest.skip("compiled backend not built")
    py = kernels.backend_module("py")
    cc = kernels.backend_module("c")
    a = np.zeros(dim)
    b = np.zeros(dim)
    py.accumulate_tf(tokens, a)
    cc.accumulate_tf(tokens, b)
    assert (a == b).all()
    if tokens:
        assert py.cosine(a, a) == pytest.approx(cc.cosine(b, b), abs=1e-12)


def test_tf_mass_equals_token_count():
    vec = kernels.hashed_tf(["x", "y", "x"], 32)
    assert vec.sum() == 3.0
    assert (vec >= 0).all()


def test_empty_tokens_zero_vector():
    assert not kernels.hashed_tf([], 16).any()


@pytest.mark.parametrize("backend", BACKENDS)
def test_cosine_identity_and_orthogonal(backend):
    mod = kernels.backend_module(backend)
    a = np.array([1.0, 2.0, 3.0])
    assert mod.cosine(a, a) == pytest.approx(1.0)
    assert mod.cosine(np.array([1.0, 0.0]), np.array([0.0, 5.0])) == 0.0
    # hand value: cos([1,1],[1,0]) = 1/sqrt(2)
    got = mod.cosine(np.array([1.0, 1.0]), np.array([1.0, 0.0]))
    assert got == pytest.approx(1 / math.sqrt(2), abs=1e-12)


@pytest.mark.parametrize("backend", BACKENDS)
def test_cosine_zero_norm_raises(backend):
    mod = kernels.backend_module(backend)
    with pytest.raises(ValueError):
        mod.cosine(np.zeros(4), np.ones(4))


@pytest.mark.parametrize("backend", BACKENDS)
def test_cosine_shape_mismatch_raises(backend):
    mod = kernels.backend_module(backend)
    with pytest.raises(ValueError):
        mod.cosine(np.ones(4), np.ones(5))


def test_deterministic_across_calls():
    v1 = kernels.hashed_tf(["alpha", "beta"], 64)
    v2 = kernels.hashed_tf(["alpha", "beta"], 64)
    assert (v1 == v2).all()
