"""Training material: pair sampling, batch assembly, hard-negative mining.

Pairs are ordered: (anchor sentence, positive sentence) and (i1, i2) both
count as distinct from their swaps, which maximizes what small groups can
contribute.  Batches never contain two samples from one group, so a mined
negative is guaranteed to come from a different group by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidConfigError, NoUsableGroupsError, NoValidNegativeError
from .sylinear import NORM_EPS
from .vecstore import Dataset

MINE_DEGENERATE_DISTANCE = 1.0  # cosine contract for zero-norm pair vectors


@dataclass(frozen=True)
class PairSample:
    """Two token positions read from an anchor and a positive sentence."""

    group_id: int
    anchor_sent: int
    positive_sent: int
    i1: int
    i2: int

    def swapped(self) -> "PairSample":
        return PairSample(self.group_id, self.positive_sent, self.anchor_sent, self.i1, self.i2)


@dataclass
class TripletBatch:
    """Row-resolved batch entries; negative_index is filled by mining.

    negative j supplies its anchor pair vector as entry i's negative.
    """

    anchor_rows: np.ndarray  # (B, 2) int
    positive_rows: np.ndarray  # (B, 2) int
    group_ids: np.ndarray  # (B,) int
    samples: list[PairSample] = field(default_factory=list)
    negative_index: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.group_ids)


def _group_rng(seed: int, group_id: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, group_id]))


def sample_pairs(d: Dataset, pairs_per_group: int, seed: int) -> list[PairSample]:
    """Up to pairs_per_group samples per usable group, uniform without
    replacement over the ordered (sentence pair x index pair) space.

    Groups with fewer than 2 variants or fewer than 2 content positions
    contribute nothing; smaller spaces contribute exhaustively.
    """
    samples: list[PairSample] = []
    usable = 0
    for g in d.groups:
        n_sent = len(g.sentence_ids)
        content = sorted(g.content_indices)
        n_idx = len(content)
        if n_sent < 2 or n_idx < 2:
            continue
        usable += 1
        n_sent_pairs = n_sent * (n_sent - 1)
        n_idx_pairs = n_idx * (n_idx - 1)
        total = n_sent_pairs * n_idx_pairs
        rng = _group_rng(seed, g.group_id)
        if total <= pairs_per_group:
            chosen = np.arange(total)
        else:
            chosen = rng.choice(total, size=pairs_per_group, replace=False)
        for flat in chosen:
            sp, ip = divmod(int(flat), n_idx_pairs)
            a, rest = divmod(sp, n_sent - 1)
            b = rest if rest < a else rest + 1
            i, rest = divmod(ip, n_idx - 1)
            j = rest if rest < i else rest + 1
            samples.append(
                PairSample(
                    group_id=g.group_id,
                    anchor_sent=g.sentence_ids[a],
                    positive_sent=g.sentence_ids[b],
                    i1=content[i],
                    i2=content[j],
                )
            )
    if usable == 0:
        raise NoUsableGroupsError("no group has >= 2 variants and >= 2 content positions")
    return samples


def _resolve_rows(d: Dataset, samples: list[PairSample]) -> tuple[np.ndarray, np.ndarray]:
    index = {(t.sent_id, t.tok_idx): t.row for t in d.tokens}
    anchor = np.empty((len(samples), 2), dtype=np.int64)
    positive = np.empty((len(samples), 2), dtype=np.int64)
    for k, s in enumerate(samples):
        anchor[k, 0] = index[(s.anchor_sent, s.i1)]
        anchor[k, 1] = index[(s.anchor_sent, s.i2)]
        positive[k, 0] = index[(s.positive_sent, s.i1)]
        positive[k, 1] = index[(s.positive_sent, s.i2)]
    return anchor, positive


def build_batches(
    d: Dataset,
    samples: list[PairSample],
    batch_size: int,
    symmetry: bool,
    seed: int,
) -> list[TripletBatch]:
    """Shuffle, then pack batches of distinct groups; swaps appended last.

    A sample whose group is already present in the batch under construction
    is deferred to a later batch, so every batch holds at most one sample
    per group.  The trailing partial batch is kept.  With symmetry on, each
    batch is doubled in place: entry len+i is the (positive, anchor) swap
    of entry i, appended before any mining happens.
    """
    if batch_size < 2:
        raise InvalidConfigError(f"batch_size must be >= 2, got {batch_size}")
    rng = np.random.default_rng(np.random.SeedSequence([seed]))
    order = rng.permutation(len(samples))
    pending = [samples[i] for i in order]

    batches: list[TripletBatch] = []
    while pending:
        chosen: list[PairSample] = []
        rest: list[PairSample] = []
        seen: set[int] = set()
        for k, s in enumerate(pending):
            if len(chosen) == batch_size:
                rest.extend(pending[k:])
                break
            if s.group_id in seen:
                rest.append(s)
            else:
                chosen.append(s)
                seen.add(s.group_id)
        if symmetry:
            chosen = chosen + [s.swapped() for s in chosen]
        anchor, positive = _resolve_rows(d, chosen)
        batches.append(
            TripletBatch(
                anchor_rows=anchor,
                positive_rows=positive,
                group_ids=np.array([s.group_id for s in chosen], dtype=np.int64),
                samples=chosen,
            )
        )
        pending = rest
    return batches


def mine_hard_negatives(anchor_pair_vectors: np.ndarray, group_ids: np.ndarray) -> np.ndarray:
    """argmin of cosine distance over entries from other groups, per entry.

    Ties break toward the smallest index.  Degenerate (near-zero) pair
    vectors sit at distance exactly 1.0 from everything, matching the
    cosine contract.
    """
    v = np.asarray(anchor_pair_vectors, dtype=np.float64)
    gids = np.asarray(group_ids)
    b = v.shape[0]
    if len(np.unique(gids)) < 2:
        raise NoValidNegativeError("all batch entries share one group")

    norms = np.linalg.norm(v, axis=1)
    degenerate = norms < NORM_EPS
    safe = np.where(degenerate, 1.0, norms)
    unit = v / safe[:, None]
    unit[degenerate] = 0.0  # dot 0 against anything -> distance exactly 1.0

    dist = 1.0 - unit @ unit.T
    np.clip(dist, 0.0, 2.0, out=dist)
    dist[degenerate, :] = MINE_DEGENERATE_DISTANCE
    dist[:, degenerate] = MINE_DEGENERATE_DISTANCE
    dist[gids[:, None] == gids[None, :]] = np.inf

    return np.argmin(dist, axis=1).astype(np.int64)
