import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from structmap.errors import BadMagicError, DimMismatchError, InvalidDimsError, UnminedBatchError
from structmap.sampler import TripletBatch
from structmap.sylinear import (
    AdamState,
    LinearMap,
    adam_step,
    batch_loss_grad,
    cosine_distance,
    cosine_distance_with_flag,
    forward,
    init_map,
    load_map,
    pair_vector,
    save_map,
    triplet_loss,
)
from structmap.vecstore import VectorStore


class _Store:
    """Bare vector holder; batch_loss_grad only touches .store."""

    def __init__(self, data):
        self.store = VectorStore(np.asarray(data, dtype=np.float32))


def _batch(n_entries, neg=None):
    anchor = np.arange(2 * n_entries).reshape(n_entries, 2)
    positive = np.arange(2 * n_entries, 4 * n_entries).reshape(n_entries, 2)
    if neg is None:
        neg = np.array([(i + 1) % n_entries for i in range(n_entries)])
    return TripletBatch(
        anchor_rows=anchor,
        positive_rows=positive,
        group_ids=np.arange(n_entries),
        negative_index=np.asarray(neg),
    )


# --- forward / pair_vector ---------------------------------------------------


def test_forward_identity():
    f = LinearMap(np.eye(2))
    assert np.array_equal(forward(f, np.array([1.0, 2.0])), [1.0, 2.0])


def test_forward_zero_map():
    f = LinearMap(np.zeros((3, 2)))
    assert np.array_equal(forward(f, np.array([5.0, -1.0])), np.zeros(3))


def test_forward_is_linear():
    rng = np.random.default_rng(0)
    f = LinearMap(rng.normal(size=(3, 5)))
    x, y = rng.normal(size=5), rng.normal(size=5)
    a, b = 2.5, -0.75
    np.testing.assert_allclose(
        forward(f, a * x + b * y), a * forward(f, x) + b * forward(f, y), rtol=1e-12
    )


def test_forward_dim_mismatch():
    with pytest.raises(DimMismatchError):
        forward(LinearMap(np.eye(2)), np.ones(3))


def test_pair_vector_same_input_is_zero():
    f = LinearMap(np.random.default_rng(1).normal(size=(3, 4)))
    x = np.ones(4)
    assert np.array_equal(pair_vector(f, x, x), np.zeros(3))


def test_pair_vector_identity_example():
    f = LinearMap(np.eye(2))
    assert np.array_equal(pair_vector(f, np.array([1.0, 2.0]), np.array([0.0, 1.0])), [1.0, 1.0])


def test_pair_vector_ignores_any_output_offset():
    # Pair vectors are differences: a constant added to both forward outputs
    # cancels, and pair_vector itself never sees an offset at all.
    rng = np.random.default_rng(2)
    f = LinearMap(rng.normal(size=(3, 4)))
    x, y, b = rng.normal(size=4), rng.normal(size=4), rng.normal(size=3)
    pv = pair_vector(f, x, y)
    np.testing.assert_allclose((forward(f, x) + b) - (forward(f, y) + b), pv, atol=1e-12)
    assert np.array_equal(pv, f.W @ (x - y))


# --- cosine distance ----------------------------------------------------------


def test_cosine_identical():
    u = np.array([0.3, -2.0, 1.0])
    assert cosine_distance(u, u) == 0.0


def test_cosine_orthogonal():
    assert cosine_distance(np.array([1.0, 0.0]), np.array([0.0, 2.0])) == 1.0


def test_cosine_antiparallel():
    assert cosine_distance(np.array([1.0, 2.0]), np.array([-2.0, -4.0])) == 2.0


def test_cosine_scale_invariance():
    assert cosine_distance(np.array([3.0, 0.0]), np.array([1.0, 0.0])) == 0.0
    rng = np.random.default_rng(3)
    for _ in range(50):
        u, v = rng.normal(size=4), rng.normal(size=4)
        a, b = rng.uniform(0.1, 10, size=2)
        assert abs(cosine_distance(a * u, b * v) - cosine_distance(u, v)) <= 1e-12


def test_cosine_degenerate_flag():
    d, flag = cosine_distance_with_flag(np.zeros(3), np.ones(3))
    assert d == 1.0 and flag is True
    d, flag = cosine_distance_with_flag(np.ones(3), np.ones(3))
    assert flag is False


# --- triplet loss ---------------------------------------------------------------


def test_triplet_loss_symmetric_point():
    for a in (0.0, 0.5, 1.3, 2.0):
        assert triplet_loss(a, a) == 0.5


def test_triplet_loss_closed_forms():
    assert triplet_loss(0.0, 2.0) == pytest.approx(1.0 / (1.0 + math.e**2), abs=1e-12)
    assert triplet_loss(2.0, 0.0) == pytest.approx(math.e**2 / (math.e**2 + 1.0), abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 2), st.floats(0, 2))
def test_triplet_loss_complementarity(a, b):
    assert abs(triplet_loss(a, b) + triplet_loss(b, a) - 1.0) <= 1e-12


def test_triplet_loss_monotonicity():
    rng = np.random.default_rng(4)
    h = 1e-7
    for _ in range(50):
        a, b = rng.uniform(h, 2 - h, size=2)
        assert triplet_loss(a + h, b) > triplet_loss(a - h, b)
        assert triplet_loss(a, b + h) < triplet_loss(a, b - h)


# --- batch loss / gradient ------------------------------------------------------


def test_batch_loss_grad_matches_finite_differences():
    rng = np.random.default_rng(7)
    for _ in range(20):
        n, m, bsz = 5, 3, 4
        d = _Store(rng.normal(size=(4 * bsz, n)))
        batch = _batch(bsz)
        w = rng.normal(size=(m, n))
        loss, grad, skipped = batch_loss_grad(LinearMap(w.copy()), d, batch)
        assert skipped == 0
        h = 1e-6
        fd = np.zeros_like(w)
        for i in range(m):
            for j in range(n):
                wp, wm = w.copy(), w.copy()
                wp[i, j] += h
                wm[i, j] -= h
                lp, _, _ = batch_loss_grad(LinearMap(wp), d, batch)
                lm, _, _ = batch_loss_grad(LinearMap(wm), d, batch)
                fd[i, j] = (lp - lm) / (2 * h)
        rel = np.linalg.norm(grad - fd) / np.linalg.norm(fd)
        assert rel <= 1e-6


def test_batch_loss_coincident_pairs_antipodal_negatives():
    # Anchor == positive pair vectors (dAP = 0), negatives antipodal (dAN = 2).
    data = np.array(
        [[1, 0], [0, 0], [-1, 0], [0, 0], [1, 0], [0, 0], [-1, 0], [0, 0]], dtype=np.float32
    )
    d = _Store(data)
    batch = TripletBatch(
        anchor_rows=np.array([[0, 1], [2, 3]]),
        positive_rows=np.array([[4, 5], [6, 7]]),
        group_ids=np.array([0, 1]),
        negative_index=np.array([1, 0]),
    )
    loss, _, skipped = batch_loss_grad(LinearMap(np.eye(2)), d, batch)
    assert skipped == 0
    assert loss == pytest.approx(1.0 / (1.0 + math.e**2), abs=1e-12)


def test_batch_all_degenerate():
    d = _Store(np.ones((8, 3)))
    batch = TripletBatch(
        anchor_rows=np.array([[0, 0], [1, 1]]),  # x - x = 0: degenerate pair vectors
        positive_rows=np.array([[2, 3], [4, 5]]),
        group_ids=np.array([0, 1]),
        negative_index=np.array([1, 0]),
    )
    loss, grad, skipped = batch_loss_grad(LinearMap(np.eye(3)), d, batch)
    assert loss == 0.0
    assert np.array_equal(grad, np.zeros((3, 3)))
    assert skipped == 2


def test_unmined_batch_rejected():
    d = _Store(np.ones((16, 5)))
    batch = _batch(4)
    batch.negative_index = None
    with pytest.raises(UnminedBatchError):
        batch_loss_grad(LinearMap(np.ones((3, 5))), d, batch)


# --- adam -----------------------------------------------------------------------


def test_adam_zero_grad_keeps_weights():
    f = LinearMap(np.arange(6, dtype=float).reshape(2, 3))
    s = AdamState.initial((2, 3))
    f2, s2 = adam_step(f, s, np.zeros((2, 3)))
    assert np.array_equal(f2.W, f.W)
    assert s2.step == 1


def test_adam_scalar_first_step():
    f = LinearMap(np.zeros((1, 1)))
    s = AdamState.initial((1, 1))
    f2, _ = adam_step(f, s, np.ones((1, 1)))
    expected = -0.001 * (1.0 / (1.0 + 1e-8))
    assert f2.W[0, 0] == pytest.approx(expected, abs=1e-15)


def test_adam_does_not_mutate_inputs():
    f = LinearMap(np.ones((2, 2)))
    s = AdamState.initial((2, 2))
    w_before = f.W.copy()
    m_before = s.m1.copy()
    adam_step(f, s, np.full((2, 2), 0.5))
    assert np.array_equal(f.W, w_before)
    assert np.array_equal(s.m1, m_before)
    assert s.step == 0


def test_adam_repeated_steps_finite():
    f = LinearMap(np.zeros((2, 2)))
    s = AdamState.initial((2, 2))
    g = np.ones((2, 2))
    for expected_step in (1, 2, 3):
        f, s = adam_step(f, s, g)
        assert s.step == expected_step
        assert np.all(np.isfinite(f.W))


# --- init / persistence -----------------------------------------------------------


def test_init_map_deterministic_and_bounded():
    a = init_map(10, 4, seed=9)
    b = init_map(10, 4, seed=9)
    assert np.array_equal(a.W, b.W)
    bound = 1.0 / math.sqrt(10)
    assert np.all(np.abs(a.W) <= bound)


def test_init_map_default_dims():
    f = init_map(2048, 75, seed=0)
    assert f.W.shape == (75, 2048)


def test_init_map_invalid():
    with pytest.raises(InvalidDimsError):
        init_map(0, 3, seed=0)


def test_map_roundtrip_bit_exact(tmp_path):
    f = init_map(17, 5, seed=21)
    save_map(f, tmp_path / "m.smap")
    g = load_map(tmp_path / "m.smap")
    assert g.W.shape == (5, 17)
    assert np.array_equal(
        f.W.view(np.uint64), g.W.view(np.uint64)
    )


def test_map_bad_magic(tmp_path):
    (tmp_path / "x.smap").write_bytes(b"XXXX" + b"\x00" * 20)
    with pytest.raises(BadMagicError):
        load_map(tmp_path / "x.smap")
