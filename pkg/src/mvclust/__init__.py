"""Fusion-free multi-view clustering with multi-level contrastive learning.

Per-view autoencoders learn low-level codes under a reconstruction
objective; shared feature and label heads learn cross-view-consistent
high-level features and cluster assignments via contrastive objectives;
K-means structure in the feature space is matched back to the label
head and distilled by cross-entropy fine-tuning.
"""

from .clustering import (KmeansResult, MatchResult, build_cost_matrix,
                         final_labels, hard_labels_from_q, kmeans, match_view,
                         modify_pseudo_labels, solve_assignment)
from .data import (MultiViewDataset, SyntheticConfig, generate_synthetic,
                   load_dataset, minibatch_iter, save_dataset)
from .errors import (ConfigError, DataFormatError, MvclustError,
                     NumericalError, ShapeError)
from .estimator import MultiviewContrastiveClustering, check_views
from .gradcheck import GradCheckReport, grad_check, run_gradient_checks
from .losses import (ContrastiveConfig, assignment_entropy_penalty, cosine,
                     feature_contrastive_pair, feature_contrastive_total,
                     finetune_cross_entropy, label_consistency_loss,
                     label_contrastive_pair, reconstruction_loss,
                     total_contrastive_loss)
from .metrics import accuracy, evaluate, nmi, purity
from .network import (MultiViewNetwork, load_checkpoint, save_checkpoint,
                      spawn_rng)
from .optim import Adam, ParamTensor, adam_step
from .tensor import Tensor2D, no_grad
from .trainer import (ABLATION_VARIANTS, AblationFlags, PipelineResult,
                      TrainConfig, TrainLog, contrastive_train,
                      full_batch_losses, high_level_features,
                      predict_assignments, predict_labels, pretrain,
                      pseudo_label_stage, run_ablation, run_pipeline)

__version__ = "0.1.0"

__all__ = [
    "ABLATION_VARIANTS", "Adam", "AblationFlags", "ConfigError",
    "ContrastiveConfig", "DataFormatError", "GradCheckReport", "KmeansResult",
    "MatchResult", "MultiViewDataset", "MultiViewNetwork",
    "MultiviewContrastiveClustering", "MvclustError", "NumericalError",
    "ParamTensor", "PipelineResult", "ShapeError", "SyntheticConfig",
    "Tensor2D", "TrainConfig", "TrainLog",
    "accuracy", "adam_step", "assignment_entropy_penalty", "build_cost_matrix",
    "check_views", "contrastive_train", "cosine", "evaluate",
    "feature_contrastive_pair", "feature_contrastive_total", "final_labels",
    "finetune_cross_entropy", "full_batch_losses", "generate_synthetic",
    "grad_check", "hard_labels_from_q", "high_level_features", "kmeans",
    "label_consistency_loss", "label_contrastive_pair", "load_checkpoint",
    "load_dataset", "match_view", "minibatch_iter", "modify_pseudo_labels",
    "nmi", "no_grad", "predict_assignments", "predict_labels", "pretrain",
    "pseudo_label_stage", "purity", "reconstruction_loss", "run_ablation",
    "run_gradient_checks", "run_pipeline", "save_checkpoint", "save_dataset",
    "solve_assignment", "spawn_rng", "total_contrastive_loss",
]
