"""Unified overlapping and non-overlapping community detection on attributed
graphs with a graph convolution network and a contrastive modularity loss."""

__version__ = "0.1.0"

from .assignment import hard_assign, kmeans_assign, overlap_assign, threshold_p1
from .data import DatasetBundle, SbmConfig, bowtie, load_bundle, save_bundle, sbm_generate
from .estimator import UCoDe
from .graph import AttributedGraph, GraphValidationError
from .loss import LossConfig, target_vector, ucode_loss
from .metrics import nmi, onmi, pairwise_f1, recall_best_match
from .modularity import community_modularity_matrix, conductance, modularity_score
from .partition import Cover, Partition
from .trainer import TrainConfig, evaluate, train

__all__ = [
    "AttributedGraph", "Cover", "DatasetBundle", "GraphValidationError", "LossConfig",
    "Partition", "SbmConfig", "TrainConfig", "UCoDe", "bowtie", "community_modularity_matrix",
    "conductance", "evaluate", "hard_assign", "kmeans_assign", "load_bundle", "modularity_score",
    "nmi", "onmi", "overlap_assign", "pairwise_f1", "recall_best_match", "save_bundle",
    "sbm_generate", "target_vector", "threshold_p1", "train", "ucode_loss",
]
