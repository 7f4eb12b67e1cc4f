"""Structurally equivalent sentence variants via iterative masked-LM
substitution.

Positions are visited left to right; each substitution happens in place,
so later predictions condition on earlier replacements.  Function words
(the stoplist) are never touched, and with POS preservation on, a
candidate only survives if it keeps the original tag at that position.
Every step is logged with its full candidate list so a run can be audited
and replayed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backends import MaskedLM, Tagger, stable_seed
from .config import GenConfig


@dataclass(frozen=True)
class StepLog:
    variant: int
    position: int
    original: str
    candidates: tuple[str, ...]  # POS/stoplist-filtered, order preserved
    chosen: str


@dataclass
class VariantSet:
    original: list[str]
    pos: list[str]
    variants: list[list[str]]
    steps: list[StepLog]


def generate_variants(
    tokens: list[str],
    pos: list[str],
    cfg: GenConfig,
    lm: MaskedLM,
    tagger: Tagger,
) -> VariantSet:
    """k structure-preserving rewrites of one sentence, with audit logs."""
    cfg.check()
    if len(tokens) != len(pos):
        raise ValueError(f"{len(tokens)} tokens vs {len(pos)} tags")
    steps: list[StepLog] = []
    variants: list[list[str]] = []
    for variant in range(cfg.k_variants):
        current = list(tokens)
        rng = np.random.default_rng(stable_seed("variant", cfg.seed, variant, " ".join(tokens)))
        for i, original in enumerate(tokens):
            if original in cfg.function_stoplist:
                continue
            raw = lm.top_candidates(current, i, cfg.top_predictions)
            kept = []
            for cand in raw:
                if cand in cfg.function_stoplist:
                    continue
                if cfg.preserve_pos:
                    probe = list(current)
                    probe[i] = cand
                    if tagger.tag_in_context(probe, i) != pos[i]:
                        continue
                kept.append(cand)
            if kept:
                chosen = kept[int(rng.integers(len(kept)))]
            else:
                chosen = original  # nothing admissible: keep the word
            current[i] = chosen
            steps.append(
                StepLog(
                    variant=variant,
                    position=i,
                    original=original,
                    candidates=tuple(kept),
                    chosen=chosen,
                )
            )
        variants.append(current)
    return VariantSet(original=list(tokens), pos=list(pos), variants=variants, steps=steps)
