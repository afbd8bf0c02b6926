"""Scikit-learn style estimator for multi-view contrastive clustering.

The estimator consumes a list of row-aligned view matrices (one sample
per row in every view), in the spirit of multiview estimators such as
mvlearn's: ``fit(Xs)`` runs the full training pipeline, ``predict(Xs)``
labels new samples through the trained encoders and label head, and
``transform(Xs)`` exposes the per-view high-level features.
"""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.exceptions import NotFittedError

from .data import MultiViewDataset
from .losses import ContrastiveConfig
from .trainer import (AblationFlags, TrainConfig, high_level_features,
                      predict_labels, run_pipeline)


def check_views(Xs, expected_dims=None) -> list[np.ndarray]:
    """Validate a list of view matrices and return float64 copies.

    Checks that every view is a finite 2-D matrix, that all views have
    the same number of rows, and (when ``expected_dims`` is given) that
    column counts match the fitted views.
    """
    if isinstance(Xs, np.ndarray) and Xs.ndim == 2:
        Xs = [Xs]
    views = []
    for m, x in enumerate(Xs):
        arr = np.asarray(x, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"view {m} must be a 2-D matrix, got shape {arr.shape}")
        if arr.shape[0] < 1:
            raise ValueError(f"view {m} has no samples")
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"view {m} contains non-finite values")
        views.append(arr)
    if not views:
        raise ValueError("need at least one view")
    n = views[0].shape[0]
    for m, arr in enumerate(views):
        if arr.shape[0] != n:
            raise ValueError(f"view 0 has {n} rows but view {m} has {arr.shape[0]}")
    if expected_dims is not None:
        dims = tuple(v.shape[1] for v in views)
        if dims != tuple(expected_dims):
            raise ValueError(f"view dimensions {dims} do not match fitted "
                             f"dimensions {tuple(expected_dims)}")
    return views


class MultiviewContrastiveClustering(ClusterMixin, BaseEstimator):
    """Fusion-free deep multi-view clustering.

    Each view is compressed by its own autoencoder; a shared linear head
    learns cross-view-consistent high-level features and a shared
    softmax head learns cluster assignments, both trained contrastively.
    K-means structure found in the high-level features is then matched
    to the assignment head and distilled back by cross-entropy
    fine-tuning.

    Parameters
    ----------
    n_clusters : int
        Number of clusters to form.
    latent_dim, high_dim : int
        Widths of the latent codes and the high-level features.
    encoder_widths : tuple of int
        Hidden layer widths of every encoder (decoders mirror them).
    label_hidden : tuple of int
        Optional hidden widths of the label head (empty = one linear
        layer).
    pretrain_epochs, contrastive_epochs, finetune_epochs : int
        Schedule of the three training stages.
    batch_size : int
        Minibatch size (clamped to the number of samples).
    learning_rate : float
        Adam step size, shared by all stages.
    tau_feature, tau_label : float
        Contrastive temperatures for features and assignment columns.
    lambda_feature, lambda_label : float
        Weights of the two contrastive objectives in the joint loss.
    use_reconstruction, use_high_level, contrast_on_low,
    contrast_on_labels : bool
        Objective switches; the defaults give the full pipeline.
    matching_refresh_every : int
        If positive, recompute K-means matching every that many
        fine-tuning epochs.
    random_state : int
        Seed; identical seeds give identical results.

    Attributes
    ----------
    labels_ : ndarray of shape (n_samples,)
        Cluster labels of the training samples.
    network_ : MultiViewNetwork
        The trained model.
    log_ : TrainLog
        Per-epoch training records.
    """

    def __init__(self, n_clusters=8, latent_dim=64, high_dim=32,
                 encoder_widths=(256, 128), label_hidden=(),
                 pretrain_epochs=100, contrastive_epochs=50, finetune_epochs=50,
                 batch_size=256, learning_rate=1e-3,
                 tau_feature=0.5, tau_label=1.0,
                 lambda_feature=1.0, lambda_label=1.0,
                 use_reconstruction=True, use_high_level=True,
                 contrast_on_low=False, contrast_on_labels=True,
                 matching_refresh_every=0, random_state=0):
        self.n_clusters = n_clusters
        self.latent_dim = latent_dim
        self.high_dim = high_dim
        self.encoder_widths = encoder_widths
        self.label_hidden = label_hidden
        self.pretrain_epochs = pretrain_epochs
        self.contrastive_epochs = contrastive_epochs
        self.finetune_epochs = finetune_epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.tau_feature = tau_feature
        self.tau_label = tau_label
        self.lambda_feature = lambda_feature
        self.lambda_label = lambda_label
        self.use_reconstruction = use_reconstruction
        self.use_high_level = use_high_level
        self.contrast_on_low = contrast_on_low
        self.contrast_on_labels = contrast_on_labels
        self.matching_refresh_every = matching_refresh_every
        self.random_state = random_state

    def _train_config(self) -> TrainConfig:
        if not isinstance(self.n_clusters, numbers.Integral) or self.n_clusters < 2:
            raise ValueError(f"n_clusters must be an integer >= 2, "
                             f"got {self.n_clusters!r}")
        return TrainConfig(
            pretrain_epochs=self.pretrain_epochs,
            contrastive_epochs=self.contrastive_epochs,
            finetune_epochs=self.finetune_epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            latent_dim=self.latent_dim,
            high_dim=self.high_dim,
            encoder_widths=tuple(self.encoder_widths),
            label_hidden=tuple(self.label_hidden),
            matching_refresh_every=self.matching_refresh_every,
            contrastive=ContrastiveConfig(self.tau_feature, self.tau_label,
                                          self.lambda_feature, self.lambda_label),
            ablation=AblationFlags(self.use_reconstruction, self.use_high_level,
                                   self.contrast_on_low, self.contrast_on_labels),
            seed=int(self.random_state),
        ).validate()

    def fit(self, Xs, y=None):
        """Run the training pipeline on a list of row-aligned views."""
        views = check_views(Xs)
        cfg = self._train_config()
        ds = MultiViewDataset(views, None, int(self.n_clusters))
        result = run_pipeline(ds, cfg)
        self.network_ = result.network
        self.log_ = result.log
        self.labels_ = result.labels
        self.view_dims_ = ds.view_dims
        return self

    def _check_fitted(self):
        if not hasattr(self, "network_"):
            raise NotFittedError("this estimator is not fitted yet; call fit first")

    def predict(self, Xs) -> np.ndarray:
        """Cluster labels for new samples via the trained label head."""
        self._check_fitted()
        views = check_views(Xs, expected_dims=self.view_dims_)
        return predict_labels(self.network_, views)

    def transform(self, Xs) -> list[np.ndarray]:
        """Per-view high-level features of new samples."""
        self._check_fitted()
        views = check_views(Xs, expected_dims=self.view_dims_)
        return high_level_features(self.network_, views)

    def fit_transform(self, Xs, y=None) -> list[np.ndarray]:
        return self.fit(Xs).transform(Xs)
