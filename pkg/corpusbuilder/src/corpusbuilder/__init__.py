"""Build equivalence-group datasets from raw text: masked-LM variant
generation plus contextual-vector export in the consumer's file formats."""

from .backends import LexiconTagger, ToyEncoder, ToyMaskedLM
from .config import (
    DEFAULT_STOPLIST,
    AnnotationUnavailableError,
    EncoderUnavailableError,
    GenConfig,
    TaggerUnavailableError,
)
from .encode import WordEncoder, bert_mean_plus_16, elmo_concat2, toy_word_encoder
from .export import export_dataset, write_generation_log
from .variants import VariantSet, generate_variants

__version__ = "0.1.0"
