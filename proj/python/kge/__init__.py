"""Knowledge graph embedding models, training and evaluation."""

from ._kge import (
    KgeError,
    KnowledgeGraph,
    Model,
    NegativeSampler,
    TrainConfig,
    Trainer,
    best_threshold,
    corruption_stats,
    init_model,
    link_prediction,
    load_checkpoint,
    load_triples,
    load_triples_file,
    redundancy,
    save_checkpoint,
    split,
    triplet_classification,
)

MODEL_KINDS = ("TransE", "TransH", "TransR", "TransD", "RESCAL", "DistMult", "ComplEx")

__all__ = [
    "KgeError",
    "KnowledgeGraph",
    "MODEL_KINDS",
    "Model",
    "NegativeSampler",
    "TrainConfig",
    "Trainer",
    "best_threshold",
    "corruption_stats",
    "init_model",
    "link_prediction",
    "load_checkpoint",
    "load_triples",
    "load_triples_file",
    "redundancy",
    "save_checkpoint",
    "split",
    "triplet_classification",
]
