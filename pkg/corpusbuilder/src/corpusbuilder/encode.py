"""Word-vector extraction modes over layered encoder states."""

from __future__ import annotations

import numpy as np

from .backends import LayeredEncoder, ToyEncoder
from .config import EncoderUnavailableError

# Layer counts of the real stacks these modes target: ELMo exposes an
# embedding layer plus two contextual layers; BERT-Large exposes an
# embedding layer plus 24 transformer layers.
ELMO_LAYERS = 3
BERT_LAYERS = 25
BERT_SYNTAX_LAYER = 16


def elmo_concat2(states: np.ndarray) -> np.ndarray:
    """Concatenate the two deepest layers (the contextual ones)."""
    return np.concatenate([states[-2], states[-1]], axis=-1)


def bert_mean_plus_16(states: np.ndarray) -> np.ndarray:
    """Mean of the contextual layers concatenated with layer 16."""
    return np.concatenate([states[1:].mean(axis=0), states[BERT_SYNTAX_LAYER]], axis=-1)


_MODES = {
    "elmo-concat2": (ELMO_LAYERS, elmo_concat2),
    "bert-mean+16": (BERT_LAYERS, bert_mean_plus_16),
}


class WordEncoder:
    """Encoder + extraction mode; emits one vector per word."""

    def __init__(self, mode: str, backend: LayeredEncoder):
        if mode not in _MODES:
            raise EncoderUnavailableError(f"unknown encoder mode {mode!r}")
        n_layers, combine = _MODES[mode]
        if backend.n_layers != n_layers:
            raise EncoderUnavailableError(
                f"mode {mode!r} needs {n_layers} layers, backend exposes {backend.n_layers}"
            )
        self.mode = mode
        self.backend = backend
        self._combine = combine
        self.dim = 2 * backend.hidden

    def encode(self, tokens: list[str]) -> np.ndarray:
        states = self.backend.layer_states(tokens)
        out = self._combine(states)
        assert out.shape == (len(tokens), self.dim)
        return out


def toy_word_encoder(mode: str) -> WordEncoder:
    n_layers, _ = _MODES.get(mode, (None, None))
    if n_layers is None:
        raise EncoderUnavailableError(f"unknown encoder mode {mode!r}")
    return WordEncoder(mode, ToyEncoder(n_layers=n_layers))
