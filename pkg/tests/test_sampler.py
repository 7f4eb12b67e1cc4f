import itertools

import numpy as np
import pytest

from structmap.errors import InvalidConfigError, NoUsableGroupsError, NoValidNegativeError
from structmap.sampler import PairSample, build_batches, mine_hard_negatives, sample_pairs
from structmap.sylinear import cosine_distance
from structmap.vecstore import Dataset, TokenRecord, VectorStore, build_groups

from conftest import toy_dataset


def _dataset_with_function_mask():
    # 2 sentences per group, 5 positions, content indices {1, 3, 4}.
    return toy_dataset(
        n_groups=1, variants=2, length=5, function_mask=[True, False, True, False, False]
    )


def test_sample_space_exhausted_when_small():
    d = _dataset_with_function_mask()
    samples = sample_pairs(d, pairs_per_group=100, seed=0)
    # ordered sentence pairs (2) x ordered index pairs over {1,3,4} (6) = 12
    assert len(samples) == 12
    assert len(set(samples)) == 12
    expected = {
        (a, b, i, j)
        for a, b in itertools.permutations([0, 1], 2)
        for i, j in itertools.permutations([1, 3, 4], 2)
    }
    assert {(s.anchor_sent, s.positive_sent, s.i1, s.i2) for s in samples} == expected


def test_sample_invariants_and_budget():
    d = toy_dataset(n_groups=6, variants=4, length=8, seed=2)
    samples = sample_pairs(d, pairs_per_group=11, seed=1)
    assert len(samples) == 6 * 11
    for s in samples:
        g = d.group_by_id(s.group_id)
        assert s.anchor_sent != s.positive_sent
        assert s.anchor_sent in g.sentence_ids and s.positive_sent in g.sentence_ids
        assert s.i1 != s.i2
        assert s.i1 in g.content_indices and s.i2 in g.content_indices


def test_single_variant_group_contributes_nothing():
    d = toy_dataset(n_groups=2, variants=1)
    with pytest.raises(NoUsableGroupsError):
        sample_pairs(d, pairs_per_group=5, seed=0)


def test_mixed_usable_groups():
    full = toy_dataset(n_groups=2, variants=2, length=3, seed=0)
    # strip group 1 down to one sentence: it must contribute nothing
    tokens = [t for t in full.tokens if not (t.group_id == 1 and t.variant == 1)]
    d = Dataset(full.store, tokens, build_groups(tokens), False, True)
    samples = sample_pairs(d, pairs_per_group=4, seed=0)
    assert {s.group_id for s in samples} == {0}


def test_sample_determinism():
    d = toy_dataset(n_groups=5, variants=3, length=6, seed=4)
    a = sample_pairs(d, pairs_per_group=7, seed=42)
    b = sample_pairs(d, pairs_per_group=7, seed=42)
    c = sample_pairs(d, pairs_per_group=7, seed=43)
    assert a == b
    assert a != c


def test_batches_have_distinct_groups():
    d = toy_dataset(n_groups=8, variants=3, length=4, seed=5)
    samples = sample_pairs(d, pairs_per_group=6, seed=0)
    batches = build_batches(d, samples, batch_size=5, symmetry=False, seed=0)
    assert sum(len(b) for b in batches) == len(samples)
    for b in batches:
        assert len(set(b.group_ids.tolist())) == len(b)


def test_same_group_samples_become_singleton_batches():
    d = toy_dataset(n_groups=1, variants=2, length=4, seed=6)
    samples = sample_pairs(d, pairs_per_group=3, seed=0)[:3]
    batches = build_batches(d, samples, batch_size=3, symmetry=False, seed=0)
    assert [len(b) for b in batches] == [1, 1, 1]
    for b in batches:
        assert len(set(b.group_ids.tolist())) == 1


def test_symmetry_doubles_with_swapped_tail():
    d = toy_dataset(n_groups=6, variants=3, length=4, seed=7)
    samples = sample_pairs(d, pairs_per_group=4, seed=1)
    batches = build_batches(d, samples, batch_size=4, symmetry=True, seed=1)
    for b in batches:
        half = len(b) // 2
        assert len(b) == 2 * half
        for i in range(half):
            orig, swap = b.samples[i], b.samples[half + i]
            assert swap.anchor_sent == orig.positive_sent
            assert swap.positive_sent == orig.anchor_sent
            assert (swap.group_id, swap.i1, swap.i2) == (orig.group_id, orig.i1, orig.i2)
            assert np.array_equal(b.anchor_rows[half + i], b.positive_rows[i])
            assert np.array_equal(b.positive_rows[half + i], b.anchor_rows[i])


def test_symmetry_off_keeps_length():
    d = toy_dataset(n_groups=4, variants=2, length=3, seed=8)
    samples = sample_pairs(d, pairs_per_group=2, seed=0)
    batches = build_batches(d, samples, batch_size=4, symmetry=False, seed=0)
    assert sum(len(b) for b in batches) == len(samples)


def test_batch_size_cap_with_symmetry():
    d = toy_dataset(n_groups=12, variants=2, length=4, seed=9)
    samples = sample_pairs(d, pairs_per_group=6, seed=0)
    batches = build_batches(d, samples, batch_size=8, symmetry=True, seed=0)
    assert all(len(b) <= 16 for b in batches)


def test_batch_size_validation(tiny_dataset):
    with pytest.raises(InvalidConfigError):
        build_batches(tiny_dataset, [], batch_size=1, symmetry=False, seed=0)


# --- mining ------------------------------------------------------------------


def test_mine_worked_example():
    v = np.array([[1.0, 0.0], [0.9, 0.1], [-1.0, 0.0]])
    assert mine_hard_negatives(v, np.array([1, 2, 3])).tolist() == [1, 0, 1]


def test_mine_two_entries_select_each_other():
    v = np.array([[1.0, 0.0], [0.0, 1.0]])
    assert mine_hard_negatives(v, np.array([0, 1])).tolist() == [1, 0]


def test_mine_duplicates_attract():
    v = np.array([[1.0, 1.0], [1.0, 1.0], [-3.0, 0.5]])
    neg = mine_hard_negatives(v, np.array([0, 1, 2]))
    assert neg[0] == 1 and neg[1] == 0


def test_mine_rejects_single_group():
    with pytest.raises(NoValidNegativeError):
        mine_hard_negatives(np.eye(3), np.array([7, 7, 7]))


def test_mine_negative_always_other_group():
    rng = np.random.default_rng(11)
    for _ in range(50):
        b = int(rng.integers(2, 30))
        gids = rng.integers(0, max(2, b // 2), size=b)
        while len(np.unique(gids)) < 2:
            gids = rng.integers(0, max(2, b // 2), size=b)
        v = rng.normal(size=(b, 4))
        neg = mine_hard_negatives(v, gids)
        assert np.all(neg != np.arange(b))
        assert np.all(gids[neg] != gids)


def test_mine_matches_bruteforce():
    rng = np.random.default_rng(12)
    for trial in range(200):
        b = int(rng.integers(2, 40))
        gids = rng.integers(0, max(2, b // 2), size=b)
        while len(np.unique(gids)) < 2:
            gids = rng.integers(0, max(2, b // 2), size=b)
        v = rng.normal(size=(b, 5))
        if b >= 4 and trial % 3 == 0:
            v[1] = v[0]  # exact duplicate across groups
            gids[1] = gids[0] + 1
        if trial % 5 == 0:
            v[-1] = 0.0  # degenerate row
        got = mine_hard_negatives(v, gids)
        for i in range(b):
            best, best_d = -1, np.inf
            for j in range(b):
                if gids[j] == gids[i]:
                    continue
                dij = cosine_distance(v[i], v[j])
                if dij < best_d:
                    best_d, best = dij, j
            assert got[i] == best, f"trial {trial} row {i}"
