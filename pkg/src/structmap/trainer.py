"""Epoch loop: sample once, then per epoch shuffle, mine, step.

The pair pool is fixed after the initial sampling; every epoch reshuffles
the pool into fresh batches with an epoch-derived seed and re-mines
negatives under the current map.  The final map is the last one, with no
validation-based selection.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidConfigError, NoUsableGroupsError
from .sampler import TripletBatch, build_batches, mine_hard_negatives, sample_pairs
from .sylinear import AdamState, LinearMap, adam_step, batch_loss_grad, init_map, save_map
from .vecstore import Dataset

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 5
    batch_size: int = 500
    pairs_per_group: int = 11
    symmetry: bool = True
    out_dim: int = 75
    seed: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    checkpoint_every: int = 0
    log_every: int = 0


@dataclass
class TrainReport:
    epoch_losses: list[float] = field(default_factory=list)
    skipped: list[int] = field(default_factory=list)
    final_map_path: str | None = None
    wall_time: float = 0.0


def _subseed(seed: int, *key: int) -> int:
    return int(np.random.SeedSequence([seed, *key]).generate_state(1)[0])


def anchor_pair_vectors(f: LinearMap, d: Dataset, batch: TripletBatch) -> np.ndarray:
    """Transformed anchor pair vectors under the current map, (B, m)."""
    x = d.store.data
    a = batch.anchor_rows
    delta = x[a[:, 0]].astype(np.float64) - x[a[:, 1]].astype(np.float64)
    return delta @ f.W.T


def _check_config(cfg: TrainConfig) -> None:
    if cfg.epochs < 1:
        raise InvalidConfigError(f"epochs must be >= 1, got {cfg.epochs}")
    if cfg.batch_size < 2:
        raise InvalidConfigError(f"batch_size must be >= 2, got {cfg.batch_size}")
    if cfg.out_dim < 1 or cfg.pairs_per_group < 1:
        raise InvalidConfigError("out_dim and pairs_per_group must be >= 1")
    if cfg.seed < 0:
        raise InvalidConfigError("seed must be >= 0")


def train(
    d: Dataset, cfg: TrainConfig, out_dir: str | Path | None = None
) -> tuple[LinearMap, TrainReport]:
    """Train the map; deterministic end-to-end under cfg.seed.

    Returns the last map.  Per-epoch mean loss weights batches by entry
    count.  The skipped tally counts degenerate entries plus entries of
    batches that had no second group to mine from.
    """
    _check_config(cfg)
    started = time.perf_counter()

    pool = sample_pairs(d, cfg.pairs_per_group, seed=_subseed(cfg.seed, 1))
    if len({s.group_id for s in pool}) < 2:
        raise NoUsableGroupsError("need samples from >= 2 groups to mine negatives")

    f = init_map(d.store.dim, cfg.out_dim, seed=_subseed(cfg.seed, 2))
    adam = AdamState.initial(
        f.W.shape, lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.adam_eps
    )

    out_dir = Path(out_dir) if out_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)

    report = TrainReport()
    for epoch in range(cfg.epochs):
        batches = build_batches(
            d, pool, cfg.batch_size, cfg.symmetry, seed=_subseed(cfg.seed, 3, epoch)
        )
        loss_sum = 0.0
        n_entries = 0
        skipped = 0
        for k, batch in enumerate(batches):
            if len(np.unique(batch.group_ids)) < 2:
                skipped += len(batch)
                continue
            va = anchor_pair_vectors(f, d, batch)
            batch.negative_index = mine_hard_negatives(va, batch.group_ids)
            loss, grad, batch_skipped = batch_loss_grad(f, d, batch)
            f, adam = adam_step(f, adam, grad)
            loss_sum += loss * len(batch)
            n_entries += len(batch)
            skipped += batch_skipped
            if cfg.log_every and (k + 1) % cfg.log_every == 0:
                log.info("epoch %d batch %d/%d loss %.6f", epoch + 1, k + 1, len(batches), loss)
        epoch_loss = loss_sum / n_entries if n_entries else 0.0
        report.epoch_losses.append(epoch_loss)
        report.skipped.append(skipped)
        log.info("epoch %d mean loss %.6f (skipped %d)", epoch + 1, epoch_loss, skipped)
        if (
            out_dir is not None
            and cfg.checkpoint_every > 0
            and (epoch + 1) % cfg.checkpoint_every == 0
        ):
            save_map(f, out_dir / f"model_epoch{epoch + 1:04d}.smap")

    report.wall_time = time.perf_counter() - started
    if out_dir is not None:
        final = out_dir / "model.smap"
        save_map(f, final)
        report.final_map_path = str(final)
        manifest = {
            "config": asdict(cfg),
            "epoch_losses": report.epoch_losses,
            "skipped": report.skipped,
        }
        (out_dir / "train_manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return f, report
