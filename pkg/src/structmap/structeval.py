"""Quantitative evaluations: nearest-neighbour structural agreement,
depth correlation, lexical match, hard-subset filtering, k-means cluster
purity, and a few-shot dependency-label probe.

Function words never enter queries or candidate pools.  All searches are
exact; large candidate sets are handled by blocking, not approximation.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimMismatchError,
    EmptyCandidateSetError,
    InsufficientDataError,
    InvalidConfigError,
    LengthMismatchError,
    MissingAnnotationsError,
)
from .sylinear import NORM_EPS, AdamState, LinearMap, adam_step
from .vecstore import Dataset

EXCLUSION_MODES = ("self", "sentence", "group")
QUERY_BLOCK = 256

EVAL_SPLIT_SIZE = 2000
PROBE_LR = 0.1
PROBE_ITERS = 200
PROBE_L2 = 1e-4


@dataclass
class EvalConfig:
    transform: LinearMap | None = None
    n_queries: int = 1000
    exclusion: str = "sentence"
    hard_top_pos: int = 0  # 0 = no POS filtering
    hard_values: bool = False  # restrict the value pool to the hard tags too
    kmeans_ks: tuple[int, ...] = (10, 20, 40, 80)
    kmeans_iters: int = 100
    kmeans_tol: float = 1e-6
    seed: int = 0


@dataclass
class EvalReport:
    dep_edge: float | None = None
    head_dep_edge: float | None = None
    cpath_complete: float | None = None
    cpath_l3: float | None = None
    cpath_l2: float | None = None
    depth_pearson: float | None = None
    lexical_match: float | None = None
    n_queries_used: int = 0
    n_queries_skipped: int = 0
    purity: dict[int, float] = field(default_factory=dict)
    probe: dict[int, float] = field(default_factory=dict)
    probe_majority: float | None = None

    def to_dict(self) -> dict:
        return {
            "dep_edge": self.dep_edge,
            "head_dep_edge": self.head_dep_edge,
            "cpath_complete": self.cpath_complete,
            "cpath_l3": self.cpath_l3,
            "cpath_l2": self.cpath_l2,
            "depth_pearson": self.depth_pearson,
            "lexical_match": self.lexical_match,
            "n_queries_used": self.n_queries_used,
            "n_queries_skipped": self.n_queries_skipped,
            "purity": {str(k): v for k, v in sorted(self.purity.items())},
            "probe": {str(k): v for k, v in sorted(self.probe.items())},
            "probe_majority": self.probe_majority,
        }


@dataclass
class ProbeResult:
    accuracy: dict[int, float]
    majority: float


@dataclass
class Retrieval:
    """Per-query retrieval outcome; value_idx is -1 where nothing passed
    the exclusion rule (found False, distance inf)."""

    query_idx: np.ndarray
    value_idx: np.ndarray
    found: np.ndarray
    distance: np.ndarray


def token_representations(d: Dataset, transform: LinearMap | None) -> np.ndarray:
    """Token-aligned (N_tokens, D) float64 matrix, transformed if given."""
    rows = np.array([t.row for t in d.tokens], dtype=np.int64)
    x = d.store.data[rows].astype(np.float64)
    if transform is None:
        return x
    if transform.n != x.shape[1]:
        raise DimMismatchError(f"map expects n={transform.n}, vectors have dim={x.shape[1]}")
    return x @ transform.W.T


def _unit_rows(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1)
    degenerate = norms < NORM_EPS
    safe = np.where(degenerate, 1.0, norms)
    unit = x / safe[:, None]
    unit[degenerate] = 0.0  # distance exactly 1.0 against everything
    return unit


def _content_indices(d: Dataset) -> list[int]:
    return [k for k, t in enumerate(d.tokens) if not t.is_function]


def pearson_with_flag(xs, ys) -> tuple[float, bool]:
    """Sample Pearson r; (0.0, True) when either side has no variance."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise LengthMismatchError(f"shapes {xs.shape} and {ys.shape} differ")
    if len(xs) < 2:
        raise LengthMismatchError("need at least 2 points")
    cx = xs - xs.mean()
    cy = ys - ys.mean()
    vx = float(np.dot(cx, cx))
    vy = float(np.dot(cy, cy))
    if vx < 1e-30 or vy < 1e-30:
        return 0.0, True
    r = float(np.dot(cx, cy)) / np.sqrt(vx * vy)
    return min(1.0, max(-1.0, r)), False


def pearson(xs, ys) -> float:
    return pearson_with_flag(xs, ys)[0]


def hard_subset(d: Dataset, top: int) -> set[str]:
    """POS tags with the highest dependency-label entropy (natural log).

    Ties break toward the lexicographically smaller tag.
    """
    if not d.has_dependency:
        raise MissingAnnotationsError("dependency annotations required")
    if top < 1:
        raise InvalidConfigError(f"top must be >= 1, got {top}")
    dists: dict[str, Counter] = {}
    for t in d.tokens:
        if not t.is_function:
            dists.setdefault(t.pos, Counter())[t.dep] += 1
    entropies = []
    for pos, counts in dists.items():
        total = sum(counts.values())
        h = -sum((c / total) * np.log(c / total) for c in counts.values())
        entropies.append((-h, pos))
    entropies.sort()
    return {pos for _, pos in entropies[:top]}


def retrieve_neighbors(d: Dataset, cfg: EvalConfig) -> Retrieval:
    """Exact cosine retrieval for a seeded sample of non-function queries.

    Ties break toward the smallest vector row.  Candidate sets are blocked
    through one matrix product per QUERY_BLOCK queries; the search itself
    is exact.
    """
    if not d.has_dependency:
        raise MissingAnnotationsError("dependency annotations required")
    if cfg.exclusion not in EXCLUSION_MODES:
        raise InvalidConfigError(f"exclusion must be one of {EXCLUSION_MODES}")
    if cfg.n_queries < 1:
        raise InvalidConfigError("n_queries must be >= 1")

    content = _content_indices(d)
    if not content:
        raise EmptyCandidateSetError("dataset has no content tokens")

    hard_tags: set[str] | None = None
    if cfg.hard_top_pos > 0:
        hard_tags = hard_subset(d, cfg.hard_top_pos)

    # Candidates sorted by row so that argmin tie-breaks toward small rows.
    values = sorted(content, key=lambda k: (d.tokens[k].row, k))
    if hard_tags is not None and cfg.hard_values:
        values = [k for k in values if d.tokens[k].pos in hard_tags]
    queries_pool = content
    if hard_tags is not None:
        queries_pool = [k for k in content if d.tokens[k].pos in hard_tags]
    if not queries_pool or not values:
        raise EmptyCandidateSetError("POS filtering removed every query or value")

    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed]))
    n_q = min(cfg.n_queries, len(queries_pool))
    drawn = rng.choice(len(queries_pool), size=n_q, replace=False)
    query_idx = np.array([queries_pool[i] for i in drawn], dtype=np.int64)

    unit = _unit_rows(token_representations(d, cfg.transform))
    val_idx = np.array(values, dtype=np.int64)
    cand = unit[val_idx]

    sent = np.array([t.sent_id for t in d.tokens], dtype=np.int64)
    group = np.array([t.group_id for t in d.tokens], dtype=np.int64)

    out = np.full(n_q, -1, dtype=np.int64)
    best_dist = np.full(n_q, np.inf)
    for start in range(0, n_q, QUERY_BLOCK):
        q = query_idx[start : start + QUERY_BLOCK]
        dist = 1.0 - unit[q] @ cand.T
        np.clip(dist, 0.0, 2.0, out=dist)
        if cfg.exclusion == "self":
            mask = val_idx[None, :] == q[:, None]
        elif cfg.exclusion == "sentence":
            mask = sent[val_idx][None, :] == sent[q][:, None]
        else:
            mask = group[val_idx][None, :] == group[q][:, None]
        dist[mask] = np.inf
        best = np.argmin(dist, axis=1)
        found = np.isfinite(dist[np.arange(len(q)), best])
        out[start : start + len(q)] = np.where(found, val_idx[best], -1)
        best_dist[start : start + len(q)] = dist[np.arange(len(q)), best]
    return Retrieval(query_idx=query_idx, value_idx=out, found=out >= 0, distance=best_dist)


def retrieval_dump(d: Dataset, r: Retrieval) -> list[dict]:
    """Line-dump records (query row, labels, retrieved row, distance)."""
    out = []
    for q, v, ok, dist in zip(r.query_idx, r.value_idx, r.found, r.distance):
        tq = d.tokens[q]
        rec = {
            "query_row": tq.row,
            "query_dep": tq.dep,
            "query_pos": tq.pos,
            "query_depth": tq.depth,
            "query_lex_id": tq.lex_id,
            "value_row": None,
            "value_dep": None,
            "distance": None,
        }
        if ok:
            tv = d.tokens[v]
            rec.update(value_row=tv.row, value_dep=tv.dep, distance=float(dist))
        out.append(rec)
    return out


def nn_agreement(d: Dataset, cfg: EvalConfig) -> EvalReport:
    """Closest-word agreement rates over a seeded query sample."""
    r = retrieve_neighbors(d, cfg)
    used = [(int(q), int(v)) for q, v, ok in zip(r.query_idx, r.value_idx, r.found) if ok]
    if not used:
        raise EmptyCandidateSetError("every query lost its whole candidate set")

    toks = d.tokens
    n = len(used)
    dep = sum(toks[q].dep == toks[v].dep for q, v in used) / n
    head = sum(toks[q].head_dep == toks[v].head_dep for q, v in used) / n
    lex = sum(toks[q].lex_id == toks[v].lex_id for q, v in used) / n
    depth_r, _ = pearson_with_flag(
        [toks[q].depth for q, _ in used], [toks[v].depth for _, v in used]
    ) if n >= 2 else (0.0, True)

    report = EvalReport(
        dep_edge=dep,
        head_dep_edge=head,
        lexical_match=lex,
        depth_pearson=depth_r,
        n_queries_used=n,
        n_queries_skipped=int(np.sum(~r.found)),
    )
    if d.has_constituency:
        report.cpath_complete = sum(toks[q].cpath == toks[v].cpath for q, v in used) / n
        report.cpath_l3 = sum(toks[q].cpath[:3] == toks[v].cpath[:3] for q, v in used) / n
        report.cpath_l2 = sum(toks[q].cpath[:2] == toks[v].cpath[:2] for q, v in used) / n
    return report


def _kmeans_pp_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]))
    first = int(rng.integers(n))
    centers[0] = x[first]
    d2 = np.sum((x - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = float(d2.sum())
        if total <= 0.0:
            idx = int(rng.integers(n))  # all points coincide with centers
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centers[j] = x[idx]
        d2 = np.minimum(d2, np.sum((x - centers[j]) ** 2, axis=1))
    return centers


def _assign(x: np.ndarray, centers: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # ||x-c||^2 = ||x||^2 - 2 x.c + ||c||^2; ||x||^2 constant under argmin.
    d2 = -2.0 * x @ centers.T + np.sum(centers**2, axis=1)[None, :]
    assign = np.argmin(d2, axis=1)
    best = d2[np.arange(len(x)), assign] + np.sum(x**2, axis=1)
    return assign, np.maximum(best, 0.0)


def _lloyd(
    x: np.ndarray, k: int, iters: int, tol: float, rng: np.random.Generator
) -> np.ndarray:
    centers = _kmeans_pp_init(x, k, rng)
    assign = np.zeros(len(x), dtype=np.int64)
    for _ in range(iters):
        assign, dist2 = _assign(x, centers)
        new_centers = np.empty_like(centers)
        taken: set[int] = set()
        for j in range(k):
            members = assign == j
            if members.any():
                new_centers[j] = x[members].mean(axis=0)
            else:
                order = np.argsort(-dist2)  # farthest points first
                pick = next(int(i) for i in order if int(i) not in taken)
                taken.add(pick)
                new_centers[j] = x[pick]
        movement = float(np.max(np.linalg.norm(new_centers - centers, axis=1)))
        centers = new_centers
        if movement < tol:
            break
    assign, _ = _assign(x, centers)
    return assign


def kmeans_purity(d: Dataset, cfg: EvalConfig) -> dict[int, float]:
    """Size-weighted majority-label purity of k-means clusters per K."""
    if not d.has_dependency:
        raise MissingAnnotationsError("dependency annotations required")
    if not cfg.kmeans_ks:
        raise InvalidConfigError("kmeans_ks must be nonempty")
    content = _content_indices(d)
    x = _unit_rows(token_representations(d, cfg.transform)[content])
    label_names = [d.tokens[k].dep for k in content]
    uniq = {name: i for i, name in enumerate(sorted(set(label_names)))}
    labels = np.array([uniq[name] for name in label_names], dtype=np.int64)

    out: dict[int, float] = {}
    n = len(content)
    for k in cfg.kmeans_ks:
        if k < 1 or k > n:
            raise InvalidConfigError(f"K={k} outside [1, N={n}]")
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, k]))
        assign = _lloyd(x, k, cfg.kmeans_iters, cfg.kmeans_tol, rng)
        total = 0
        for j in range(k):
            members = labels[assign == j]
            if len(members):
                total += int(np.bincount(members).max())
        out[k] = total / n
    return out


def _fit_softmax(
    x: np.ndarray, y: np.ndarray, n_classes: int, seed: int
) -> np.ndarray:
    """Multinomial logistic regression by full-batch Adam; returns (C, D+1)."""
    n, dim = x.shape
    xh = np.hstack([x, np.ones((n, 1))])
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), y] = 1.0
    theta = LinearMap(np.zeros((n_classes, dim + 1)))
    state = AdamState.initial(theta.W.shape, lr=PROBE_LR)
    for _ in range(PROBE_ITERS):
        logits = xh @ theta.W.T
        logits -= logits.max(axis=1, keepdims=True)
        p = np.exp(logits)
        p /= p.sum(axis=1, keepdims=True)
        grad = (p - onehot).T @ xh / n
        grad[:, :-1] += PROBE_L2 * theta.W[:, :-1]  # bias column unpenalized
        theta, state = adam_step(theta, state, grad)
    return theta.W


def probe_fewshot(
    d: Dataset,
    transform: LinearMap | None,
    train_sizes: list[int],
    seed: int,
) -> ProbeResult:
    """Few-shot dependency-label probe on a fixed held-out split.

    Features are standardized with training-sample statistics; the
    majority figure is the constant-prediction accuracy on the held-out
    split.
    """
    if not d.has_dependency:
        raise MissingAnnotationsError("dependency annotations required")
    if not train_sizes or min(train_sizes) < 1:
        raise InvalidConfigError("train_sizes must be positive")
    content = _content_indices(d)
    if len(content) < EVAL_SPLIT_SIZE + max(train_sizes):
        raise InsufficientDataError(
            f"need {EVAL_SPLIT_SIZE + max(train_sizes)} content tokens, have {len(content)}"
        )
    x_all = token_representations(d, transform)[content]
    names = [d.tokens[k].dep for k in content]
    uniq = {name: i for i, name in enumerate(sorted(set(names)))}
    y_all = np.array([uniq[name] for name in names], dtype=np.int64)

    rng = np.random.default_rng(np.random.SeedSequence([seed]))
    perm = rng.permutation(len(content))
    eval_idx = perm[:EVAL_SPLIT_SIZE]
    pool_idx = perm[EVAL_SPLIT_SIZE:]
    y_eval = y_all[eval_idx]
    majority = float(np.bincount(y_eval).max() / len(y_eval))

    accuracy: dict[int, float] = {}
    for size in train_sizes:
        sub = np.random.default_rng(np.random.SeedSequence([seed, size]))
        take = pool_idx[sub.choice(len(pool_idx), size=size, replace=False)]
        x_tr, y_tr = x_all[take], y_all[take]
        mean = x_tr.mean(axis=0)
        std = x_tr.std(axis=0)
        std[std < 1e-8] = 1.0
        theta = _fit_softmax((x_tr - mean) / std, y_tr, len(uniq), seed)
        x_ev = (x_all[eval_idx] - mean) / std
        pred = np.argmax(np.hstack([x_ev, np.ones((len(x_ev), 1))]) @ theta.T, axis=1)
        accuracy[size] = float(np.mean(pred == y_eval))
    return ProbeResult(accuracy=accuracy, majority=majority)
