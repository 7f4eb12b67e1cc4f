"""Pluggable masked-LM, tagger, and encoder backends.

The toy backends are fully deterministic functions of their inputs (stable
content hashing, no process-salted state), which makes generation
replayable and keeps CI independent of model downloads.  Real-model
backends live in :mod:`corpusbuilder.hf`.
"""

from __future__ import annotations

import hashlib
from typing import Protocol

import numpy as np

TOY_HIDDEN = 1024

# Content lexicon for the toy world, grouped by POS.
TOY_LEXICON = {
    "NOUN": """
        teacher student doctor author painter farmer sailor driver singer
        window garden river mountain castle bridge market library station
        village theater ocean island forest desert valley harbor meadow
        engine camera bottle basket ladder mirror carpet candle
    """.split(),
    "VERB": """
        opens follows builds carries describes enjoys gathers holds improves
        joins keeps leads makes needs paints raises sees takes uses visits
        watches writes draws finds guards lifts mends offers repairs shares
    """.split(),
    "ADJ": """
        ancient bright calm deep eager gentle happy icy jolly kind large
        merry narrow old proud quiet rapid simple tall useful vivid warm
        young golden silver
    """.split(),
    "ADV": """
        boldly calmly deeply eagerly gently happily kindly loudly neatly
        openly proudly quickly slowly warmly swiftly
    """.split(),
}

_WORD_POS = {w: pos for pos, words in TOY_LEXICON.items() for w in words}
_ALL_CONTENT_WORDS = tuple(w for words in TOY_LEXICON.values() for w in words)


def stable_seed(*parts) -> np.random.SeedSequence:
    digest = hashlib.sha256("\x1f".join(str(p) for p in parts).encode()).digest()
    return np.random.SeedSequence(list(digest[:16]))


class MaskedLM(Protocol):
    def top_candidates(self, tokens: list[str], index: int, top_n: int) -> list[str]:
        """Most likely fillers for tokens[index], best first."""
        ...


class Tagger(Protocol):
    def tags(self, tokens: list[str]) -> list[str]: ...

    def tag_in_context(self, tokens: list[str], index: int) -> str: ...


class LayeredEncoder(Protocol):
    n_layers: int
    hidden: int

    def layer_states(self, tokens: list[str]) -> np.ndarray:
        """(n_layers, len(tokens), hidden) hidden-state stack."""
        ...


class ToyMaskedLM:
    """Deterministic pseudo-LM: a seeded shuffle of the content lexicon.

    Predictions depend on the full current sentence and the masked index,
    so in-place substitution genuinely changes later prediction sets.
    """

    def top_candidates(self, tokens: list[str], index: int, top_n: int) -> list[str]:
        context = list(tokens)
        context[index] = "[MASK]"
        rng = np.random.default_rng(stable_seed("toy-lm", " ".join(context), index))
        order = rng.permutation(len(_ALL_CONTENT_WORDS))
        return [_ALL_CONTENT_WORDS[i] for i in order[:top_n]]


class LexiconTagger:
    """Context-free tagger over the toy lexicon; function words tag FUNC."""

    def __init__(self, function_words=()):
        self.function_words = set(function_words)

    def tag_in_context(self, tokens: list[str], index: int) -> str:
        word = tokens[index]
        if word in self.function_words:
            return "FUNC"
        return _WORD_POS.get(word, "NOUN")

    def tags(self, tokens: list[str]) -> list[str]:
        return [self.tag_in_context(tokens, i) for i in range(len(tokens))]


class ToyEncoder:
    """Deterministic layered encoder standing in for ELMo/BERT stacks.

    Layer 0 is a per-word embedding; every further layer mixes each
    position with its neighbours, so states are genuinely contextual while
    remaining a pure function of the token sequence.
    """

    def __init__(self, n_layers: int, hidden: int = TOY_HIDDEN):
        self.n_layers = n_layers
        self.hidden = hidden

    def _embed(self, word: str) -> np.ndarray:
        rng = np.random.default_rng(stable_seed("toy-enc", word))
        return rng.normal(size=self.hidden)

    def layer_states(self, tokens: list[str]) -> np.ndarray:
        length = len(tokens)
        states = np.empty((self.n_layers, length, self.hidden))
        states[0] = np.stack([self._embed(w) for w in tokens])
        for layer in range(1, self.n_layers):
            prev = states[layer - 1]
            left = np.roll(prev, 1, axis=0)
            right = np.roll(prev, -1, axis=0)
            left[0] = 0.0
            right[-1] = 0.0
            mix = 0.6 * prev + 0.2 * left + 0.2 * right
            shift = np.random.default_rng(stable_seed("toy-layer", layer)).normal(size=self.hidden)
            states[layer] = mix + 0.05 * shift
        return states
