from .heads import ArcFaceHead, MetricHead, embed_dataset
from .losses import (
    ArcFaceGradient,
    arcface_grad,
    arcface_loss,
    softmax_cosine_ce,
    triplet_grad,
    triplet_loss,
)
from .optim import AdamWState, adamw_step
from .sampling import Triplet, sample_triplets
from .train import (
    ARCFACE_MARGIN_GRID,
    TRIPLET_MARGIN_GRID,
    SelectionEntry,
    TrainConfig,
    TrainedModel,
    load_model,
    save_model,
    train,
)

__all__ = [
    "ArcFaceGradient",
    "ArcFaceHead",
    "MetricHead",
    "embed_dataset",
    "arcface_grad",
    "arcface_loss",
    "softmax_cosine_ce",
    "triplet_grad",
    "triplet_loss",
    "AdamWState",
    "adamw_step",
    "Triplet",
    "sample_triplets",
    "ARCFACE_MARGIN_GRID",
    "TRIPLET_MARGIN_GRID",
    "SelectionEntry",
    "TrainConfig",
    "TrainedModel",
    "load_model",
    "save_model",
    "train",
]
