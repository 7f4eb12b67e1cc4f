"""Learn and evaluate linear structural transformations of contextualized
word vectors via triplet metric learning over equivalence groups."""

from .sampler import PairSample, TripletBatch, build_batches, mine_hard_negatives, sample_pairs
from .structeval import (
    EvalConfig,
    EvalReport,
    ProbeResult,
    hard_subset,
    kmeans_purity,
    nn_agreement,
    pearson,
    probe_fewshot,
)
from .sylinear import (
    AdamState,
    LinearMap,
    adam_step,
    batch_loss_grad,
    cosine_distance,
    forward,
    init_map,
    load_map,
    pair_vector,
    save_map,
    triplet_loss,
)
from .synthgen import SynthConfig, generate_synthetic
from .trainer import TrainConfig, TrainReport, train
from .vecstore import (
    Dataset,
    EquivalenceGroup,
    TokenRecord,
    VectorStore,
    load_dataset,
    validate,
    write_dataset,
)

__version__ = "0.1.0"
