"""Real-model backends over HuggingFace transformers.

Models are loaded with ``local_files_only=True``: a cached model loads
instantly, a missing one fails fast with the Unavailable errors instead
of attempting a download mid-pipeline.  Word vectors come from the first
word-piece of each word.
"""

from __future__ import annotations

import numpy as np

from .config import (
    AnnotationUnavailableError,
    EncoderUnavailableError,
    TaggerUnavailableError,
)

BERT_MASKED_LM = "bert-base-uncased"
BERT_ENCODER = "bert-large-uncased"


def _load_transformers():
    try:
        import torch  # noqa: F401
        import transformers
    except ImportError as e:
        raise EncoderUnavailableError(f"transformers/torch not installed: {e}") from None
    return transformers


class HFMaskedLM:
    """Masked-word prediction with a cached BERT checkpoint."""

    def __init__(self, model_name: str = BERT_MASKED_LM):
        transformers = _load_transformers()
        try:
            self.tokenizer = transformers.AutoTokenizer.from_pretrained(
                model_name, local_files_only=True
            )
            self.model = transformers.AutoModelForMaskedLM.from_pretrained(
                model_name, local_files_only=True
            )
        except OSError as e:
            raise EncoderUnavailableError(f"cannot load {model_name!r} locally: {e}") from None
        self.model.eval()

    def top_candidates(self, tokens: list[str], index: int, top_n: int) -> list[str]:
        import torch

        words = list(tokens)
        words[index] = self.tokenizer.mask_token
        enc = self.tokenizer(" ".join(words), return_tensors="pt")
        mask_positions = (enc.input_ids[0] == self.tokenizer.mask_token_id).nonzero()
        if len(mask_positions) == 0:
            return []
        with torch.no_grad():
            logits = self.model(**enc).logits[0, int(mask_positions[0])]
        best = torch.topk(logits, top_n * 3).indices.tolist()
        out = []
        for tok_id in best:
            word = self.tokenizer.decode([tok_id]).strip()
            if word.isalpha():
                out.append(word)
            if len(out) == top_n:
                break
        return out


class HFLayeredEncoder:
    """Hidden-state stack of a cached BERT-Large, one vector per word."""

    hidden = 1024
    n_layers = 25

    def __init__(self, model_name: str = BERT_ENCODER):
        transformers = _load_transformers()
        try:
            self.tokenizer = transformers.AutoTokenizer.from_pretrained(
                model_name, local_files_only=True
            )
            self.model = transformers.AutoModel.from_pretrained(
                model_name, local_files_only=True, output_hidden_states=True
            )
        except OSError as e:
            raise EncoderUnavailableError(f"cannot load {model_name!r} locally: {e}") from None
        self.model.eval()
        self.hidden = int(self.model.config.hidden_size)
        self.n_layers = int(self.model.config.num_hidden_layers) + 1

    def layer_states(self, tokens: list[str]) -> np.ndarray:
        import torch

        enc = self.tokenizer(
            tokens, is_split_into_words=True, return_tensors="pt", truncation=True
        )
        with torch.no_grad():
            hidden = self.model(**enc).hidden_states  # tuple of (1, T, H)
        word_ids = enc.word_ids(0)
        first_piece = {}
        for pos, wid in enumerate(word_ids):
            if wid is not None and wid not in first_piece:
                first_piece[wid] = pos  # first word-piece represents the word
        cols = [first_piece[i] for i in range(len(tokens))]
        stack = torch.stack(hidden, dim=0)[:, 0, cols, :]
        return stack.numpy().astype(np.float64)


def _load_spacy(err):
    try:
        import spacy
    except ImportError as e:
        raise err(f"spacy not installed: {e}") from None
    try:
        return spacy, spacy.load("en_core_web_sm")
    except OSError as e:
        raise err(f"spacy model missing: {e}") from None


def spacy_tagger():
    spacy, nlp = _load_spacy(TaggerUnavailableError)

    class _SpacyTagger:
        def tags(self, tokens: list[str]) -> list[str]:
            doc = spacy.tokens.Doc(nlp.vocab, words=tokens)
            return [t.pos_ for t in nlp(doc)]

        def tag_in_context(self, tokens: list[str], index: int) -> str:
            return self.tags(tokens)[index]

    return _SpacyTagger()


def spacy_annotator():
    """Dependency annotation via spacy's parser; no constituency trees."""
    spacy, nlp = _load_spacy(AnnotationUnavailableError)
    from .export import TokenAnnotation

    class _SpacyAnnotator:
        has_dependency = True
        has_constituency = False

        def annotate(self, tokens: list[str]):
            doc = nlp(spacy.tokens.Doc(nlp.vocab, words=tokens))
            out = []
            for t in doc:
                depth = 0
                node = t
                while node.head is not node:
                    depth += 1
                    node = node.head
                out.append(
                    TokenAnnotation(
                        dep=t.dep_, head_dep=t.head.dep_, depth=depth, cpath=[]
                    )
                )
            return out

    return _SpacyAnnotator()
