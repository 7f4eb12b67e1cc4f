"""Generation configuration and the default function-word stoplist."""

from __future__ import annotations

from dataclasses import dataclass

# Closed-class words frozen in every variant.  The published experiments
# used an unpublished list; this is our documented default (~60 entries,
# mostly determiners, prepositions, pronouns, auxiliaries, conjunctions).
DEFAULT_STOPLIST = frozenset(
    """
    the a an of in on at to for with by from as into over under between
    and or but nor so yet not no
    is are was were be been being am
    do does did have has had will would can could shall should may might must
    it its he she they we you i his her their our your my
    this that these those there here
    which who whom whose what when where how why
    . , ; : ! ? ' " ( ) -
    """.split()
)

ENCODER_MODES = ("elmo-concat2", "bert-mean+16")


@dataclass(frozen=True)
class GenConfig:
    k_variants: int = 6
    top_predictions: int = 30
    function_stoplist: frozenset[str] = DEFAULT_STOPLIST
    preserve_pos: bool = True
    encoder_mode: str = "elmo-concat2"
    seed: int = 0

    def check(self) -> None:
        if self.k_variants < 1:
            raise ValueError(f"k_variants must be >= 1, got {self.k_variants}")
        if self.top_predictions < 1:
            raise ValueError(f"top_predictions must be >= 1, got {self.top_predictions}")
        if self.encoder_mode not in ENCODER_MODES:
            raise ValueError(f"encoder_mode must be one of {ENCODER_MODES}")


class EncoderUnavailableError(RuntimeError):
    """The requested contextual encoder cannot be loaded."""


class TaggerUnavailableError(RuntimeError):
    """The requested POS tagger cannot be loaded."""


class AnnotationUnavailableError(RuntimeError):
    """Dependency/constituency annotation backends cannot be loaded."""
