import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from framelog import FrameEmbeddingSequence, contextualize, cosine_distance_matrix
from framelog.errors import ZeroNormFrame
from framelog.similarity import DistanceMatrix


def seq_of(rows):
    return FrameEmbeddingSequence("v", 10, 0.0, np.array(rows, dtype=np.float32))


def random_seq(rng, t=None, d=None):
    t = t or int(rng.integers(2, 12))
    d = d or int(rng.integers(2, 8))
    data = rng.normal(size=(t, d))
    data[np.linalg.norm(data, axis=1) == 0] = 1.0
    return FrameEmbeddingSequence("v", 10, 0.0, data.astype(np.float32))


def test_identical_vectors_zero_distance():
    d = cosine_distance_matrix(seq_of([[1, 0], [1, 0]]))
    assert np.allclose(d.entries, 0.0)


def test_orthogonal_vectors():
    d = cosine_distance_matrix(seq_of([[1, 0], [0, 1]]))
    assert d.entries[0, 1] == pytest.approx(1.0)
    assert d.entries[1, 0] == pytest.approx(1.0)


def test_antipodal_vectors():
    d = cosine_distance_matrix(seq_of([[1, 0], [-1, 0]]))
    assert d.entries[0, 1] == pytest.approx(2.0)


def test_zero_norm_frame_raises_with_index():
    with pytest.raises(ZeroNormFrame) as err:
        cosine_distance_matrix(seq_of([[1, 0], [0, 0], [0, 1]]))
    assert err.value.index == 1


@given(seed=st.integers(0, 10_000))
@settings(max_examples=60, deadline=None)
def test_distance_matrix_contract(seed):
    rng = np.random.default_rng(seed)
    d = cosine_distance_matrix(random_seq(rng))
    m = d.entries
    assert np.abs(m - m.T).max() <= 1e-9
    assert np.abs(np.diagonal(m)).max() <= 1e-7
    assert m.min() >= 0.0 and m.max() <= 2.0


@given(seed=st.integers(0, 10_000), log2_scale=st.integers(-10, 10))
@settings(max_examples=60, deadline=None)
def test_cosine_scale_invariance(seed, log2_scale):
    # power-of-two scales are exact in float32, so the tolerance measures
    # the engine, not input quantization
    rng = np.random.default_rng(seed)
    seq = random_seq(rng)
    scaled = FrameEmbeddingSequence("v", 10, 0.0, seq.data * np.float32(2.0**log2_scale))
    a = cosine_distance_matrix(seq).entries
    b = cosine_distance_matrix(scaled).entries
    assert np.abs(a - b).max() <= 1e-9


def test_contextualize_shape_and_row_sums():
    rng = np.random.default_rng(3)
    seq = random_seq(rng, t=9)
    ctx = contextualize(cosine_distance_matrix(seq))
    assert ctx.rows.shape == (10, 9)
    assert np.abs(ctx.rows.sum(axis=1) - 1.0).max() <= 1e-9


def test_contextualize_two_identical_frames():
    """T=2 all-zero distances: hand evaluation of the three steps."""
    ctx = contextualize(DistanceMatrix(np.zeros((2, 2))))
    # distance rows: all-zero -> 0/0 = 0 -> softmax uniform
    assert np.allclose(ctx.rows[0], [0.5, 0.5])
    assert np.allclose(ctx.rows[1], [0.5, 0.5])
    # index row (1, 2) -> /max -> (0.5, 1) -> softmax
    z = math.exp(0.5) + math.exp(1.0)
    expected = [math.exp(0.5) / z, math.exp(1.0) / z]
    assert np.allclose(ctx.rows[2], expected, atol=1e-12)
    assert ctx.rows[2, 0] == pytest.approx(0.3775, abs=1e-4)
    assert ctx.rows[2, 1] == pytest.approx(0.6225, abs=1e-4)


def test_contextualize_sum_mode_row_stochastic():
    rng = np.random.default_rng(5)
    ctx = contextualize(cosine_distance_matrix(random_seq(rng)), norm="sum")
    assert np.abs(ctx.rows.sum(axis=1) - 1.0).max() <= 1e-9


@given(seed=st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_permutation_equivariance_of_distance_rows(seed):
    """Swapping frames j and j' permutes rows and columns of the distance
    block; the recomputed index row is unaffected by frame identity."""
    rng = np.random.default_rng(seed)
    seq = random_seq(rng)
    t = seq.frame_count
    perm = rng.permutation(t)
    permuted = FrameEmbeddingSequence("v", 10, 0.0, seq.data[perm])

    base = contextualize(cosine_distance_matrix(seq)).rows
    shuffled = contextualize(cosine_distance_matrix(permuted)).rows

    # distance rows: shuffled[i', j'] with i' = position of old i, etc.
    inv = np.empty(t, dtype=int)
    inv[perm] = np.arange(t)
    assert np.allclose(shuffled[:t][inv][:, inv], base[:t], atol=1e-12)
    # index row depends only on T
    assert np.allclose(shuffled[t], base[t], atol=1e-15)


def test_single_frame_video():
    ctx = contextualize(cosine_distance_matrix(seq_of([[1.0, 2.0]])))
    assert ctx.rows.shape == (2, 1)
    assert np.allclose(ctx.rows, 1.0)
