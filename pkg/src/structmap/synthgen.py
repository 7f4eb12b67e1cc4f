"""Synthetic equivalence-group datasets from a seeded two-factor model.

Every token vector mixes a structural code (shared by all variants of a
group at the same position) with a lexical code (drawn per token) through
fixed dense matrices, plus isotropic noise:

    vector = struct_scale * A @ s  +  lex_scale * B @ m  +  noise_scale * eps

Positions carry a discrete structural class drawn per group; the class
determines the dependency label, the parent label, the tree depth, and the
POS-tag pool.  Tokens carry a discrete lexical id that determines the
surface form.  Ground truth is therefore known exactly, which makes these
datasets the oracle for the training and evaluation pipeline: with the
default lexically-dominant scales, raw-vector nearest neighbours mostly
share the lexical id, while a transformation that isolates the structural
factor makes them share the dependency label instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfigError
from .vecstore import Dataset, TokenRecord, VectorStore, build_groups

# Internal factor-model constants.  Structural classes sit on well-separated
# centres (unit-scale, jitter 0.3) so the structural factor is recoverable;
# lexical jitter is wide (0.8) so that, conditioned on a shared word, the
# within-word neighbour ranking is not dominated by the structural term.
LEX_VOCAB_SIZE = 100
STRUCT_JITTER = 0.3
LEX_JITTER = 0.8
DEPTH_MODULUS = 4
POS_POOL_SIZE = 5
POS_TAGS_PER_CLASS = 2


@dataclass(frozen=True)
class SynthConfig:
    n_groups: int = 2000
    variants_per_group: int = 4
    sent_len: int = 8
    dim_struct: int = 10
    dim_lex: int = 40
    dim_out: int = 128
    struct_scale: float = 1.0
    lex_scale: float = 3.0
    noise_scale: float = 0.1
    n_dep_labels: int = 8
    seed: int = 7


def _check_config(cfg: SynthConfig) -> None:
    if cfg.n_groups < 1 or cfg.variants_per_group < 1 or cfg.sent_len < 1:
        raise InvalidConfigError("n_groups, variants_per_group, sent_len must be >= 1")
    if cfg.dim_struct < 1 or cfg.dim_lex < 1 or cfg.dim_out < 1:
        raise InvalidConfigError("latent and output dimensions must be >= 1")
    if min(cfg.struct_scale, cfg.lex_scale, cfg.noise_scale) < 0:
        raise InvalidConfigError("scales must be >= 0")
    if cfg.n_dep_labels < 2:
        raise InvalidConfigError("n_dep_labels must be >= 2")
    if cfg.seed < 0:
        raise InvalidConfigError("seed must be >= 0")


def generate_synthetic(cfg: SynthConfig) -> Dataset:
    """Generate a dataset with known structural/lexical ground truth.

    Deterministic: the same config (including seed) yields a byte-identical
    dataset.  Groups draw from independently spawned generators, so the
    per-group content does not depend on generation order.
    """
    _check_config(cfg)
    n_classes = cfg.n_dep_labels
    root = np.random.SeedSequence(cfg.seed)
    children = root.spawn(cfg.n_groups + 1)

    g0 = np.random.default_rng(children[0])
    mix_a = g0.normal(size=(cfg.dim_out, cfg.dim_struct)) / np.sqrt(cfg.dim_out)
    mix_b = g0.normal(size=(cfg.dim_out, cfg.dim_lex)) / np.sqrt(cfg.dim_out)
    class_centers = g0.normal(size=(n_classes, cfg.dim_struct))
    lex_centers = g0.normal(size=(LEX_VOCAB_SIZE, cfg.dim_lex))

    pos_pool = [f"pos{i}" for i in range(POS_POOL_SIZE)]
    class_pos = [
        [pos_pool[(c + 2 * j) % POS_POOL_SIZE] for j in range(POS_TAGS_PER_CLASS)]
        for c in range(n_classes)
    ]
    dep_labels = [f"dep{c}" for c in range(n_classes)]

    n_tokens = cfg.n_groups * cfg.variants_per_group * cfg.sent_len
    vectors = np.empty((n_tokens, cfg.dim_out), dtype=np.float64)
    tokens: list[TokenRecord] = []
    row = 0
    length = cfg.sent_len

    for gid in range(cfg.n_groups):
        rng = np.random.default_rng(children[gid + 1])
        classes = rng.integers(0, n_classes, size=length)
        codes = class_centers[classes] + STRUCT_JITTER * rng.normal(
            size=(length, cfg.dim_struct)
        )
        # One product per group: corresponding tokens share these bits exactly.
        struct_part = cfg.struct_scale * (codes @ mix_a.T)
        pos_pick = rng.integers(0, POS_TAGS_PER_CLASS, size=length)
        pos_tags = [class_pos[classes[i]][pos_pick[i]] for i in range(length)]

        for variant in range(cfg.variants_per_group):
            sent_id = gid * cfg.variants_per_group + variant
            lex_ids = rng.integers(0, LEX_VOCAB_SIZE, size=length)
            lex_codes = lex_centers[lex_ids] + LEX_JITTER * rng.normal(
                size=(length, cfg.dim_lex)
            )
            lex_part = cfg.lex_scale * (lex_codes @ mix_b.T)
            noise = cfg.noise_scale * rng.normal(size=(length, cfg.dim_out))
            vectors[row : row + length] = struct_part + lex_part + noise

            for i in range(length):
                c = int(classes[i])
                tokens.append(
                    TokenRecord(
                        group_id=gid,
                        sent_id=sent_id,
                        variant=variant,
                        tok_idx=i,
                        form=f"w{int(lex_ids[i])}",
                        lex_id=int(lex_ids[i]),
                        pos=pos_tags[i],
                        is_function=False,
                        dep=dep_labels[c],
                        head_dep=dep_labels[int(classes[(i + 1) % length])],
                        depth=c % DEPTH_MODULUS,
                        cpath=(),
                        row=row + i,
                    )
                )
            row += length

    return Dataset(
        store=VectorStore(vectors.astype(np.float32)),
        tokens=tokens,
        groups=build_groups(tokens),
        has_constituency=False,
        has_dependency=True,
    )
