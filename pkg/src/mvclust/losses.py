"""Training objectives: reconstruction, cross-view contrastive losses on
high-level features and on cluster-assignment columns, an anti-collapse
entropy penalty, and the pseudo-label cross-entropy used for fine-tuning.

All functions build on the ``tensor`` op set, so calling ``backward()``
on any returned scalar yields analytic gradients for every parameter
that produced the inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .tensor import (NORM_EPS, Tensor2D, add, as_tensor, col_mean, diag_part,
                     exp, log_clamped, matmul, mul, normalize_rows, row_sum,
                     scale, sub, sum_all, transpose, zero_diag)


@dataclass
class ContrastiveConfig:
    """Temperatures and component weights for the contrastive objectives."""

    tau_feature: float = 0.5
    tau_label: float = 1.0
    lambda_feature: float = 1.0
    lambda_label: float = 1.0

    def validate(self) -> "ContrastiveConfig":
        if self.tau_feature <= 0 or self.tau_label <= 0:
            raise ValueError(f"temperatures must be positive, got "
                             f"tau_feature={self.tau_feature}, tau_label={self.tau_label}")
        if self.lambda_feature < 0 or self.lambda_label < 0:
            raise ValueError(f"loss weights must be non-negative, got "
                             f"lambda_feature={self.lambda_feature}, "
                             f"lambda_label={self.lambda_label}")
        return self


def cosine(a, b) -> float:
    """Cosine similarity of two vectors, denominators guarded by NORM_EPS."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ShapeError(f"cosine: vector lengths differ, {a.shape} vs {b.shape}")
    return float(a @ b / ((np.linalg.norm(a) + NORM_EPS) * (np.linalg.norm(b) + NORM_EPS)))


def reconstruction_loss(xs, xhats) -> Tensor2D:
    """Sum over views and samples of squared L2 reconstruction error."""
    if len(xs) != len(xhats):
        raise ShapeError(f"reconstruction_loss: {len(xs)} inputs vs {len(xhats)} outputs")
    total = None
    for m, (x, xhat) in enumerate(zip(xs, xhats)):
        x, xhat = as_tensor(x), as_tensor(xhat)
        if x.shape != xhat.shape:
            raise ShapeError(f"reconstruction_loss: view {m} shapes differ, "
                             f"{x.shape} vs {xhat.shape}")
        diff = sub(xhat, x)
        term = sum_all(mul(diff, diff))
        total = term if total is None else add(total, term)
    return total


def _nce_over_rows(a: Tensor2D, b: Tensor2D, temperature: float) -> Tensor2D:
    """Cross-view InfoNCE anchored on the rows of ``a``.

    Row i of ``b`` is the positive for row i of ``a``; every other row
    of either matrix in the batch is a negative. Similarities are
    cosines scaled by 1/temperature, and the anchor's pairing with
    itself is excluded from the denominator (the positive is kept).
    """
    n = a.rows
    an = normalize_rows(a)
    bn = normalize_rows(b)
    e_cross = exp(scale(matmul(an, transpose(bn)), 1.0 / temperature))
    e_within = exp(scale(matmul(an, transpose(an)), 1.0 / temperature))
    denom = add(row_sum(e_cross), row_sum(zero_diag(e_within)))
    per_anchor = sub(log_clamped(diag_part(e_cross)), log_clamped(denom))
    return scale(sum_all(per_anchor), -1.0 / n)


def feature_contrastive_pair(h_a, h_b, temperature: float = 0.5) -> Tensor2D:
    """Contrastive loss between two views' high-level feature matrices.

    Positive pairs are same-sample rows across the two views; negatives
    are all other rows of either view.
    """
    h_a, h_b = as_tensor(h_a), as_tensor(h_b)
    if h_a.shape != h_b.shape:
        raise ShapeError(f"feature_contrastive_pair: shapes differ, "
                         f"{h_a.shape} vs {h_b.shape}")
    if h_a.rows < 1:
        raise ValueError("feature_contrastive_pair: need at least one sample")
    return _nce_over_rows(h_a, h_b, temperature)


def feature_contrastive_total(hs, temperature: float = 0.5) -> Tensor2D:
    """Half the sum of the pair loss over all ordered view pairs."""
    if len(hs) < 2:
        raise ValueError(f"feature_contrastive_total: need >= 2 views, got {len(hs)}")
    total = None
    for m in range(len(hs)):
        for n in range(len(hs)):
            if m == n:
                continue
            term = feature_contrastive_pair(hs[m], hs[n], temperature)
            total = term if total is None else add(total, term)
    return scale(total, 0.5)


def label_contrastive_pair(q_a, q_b, temperature: float = 1.0) -> Tensor2D:
    """Contrastive loss between two views' assignment matrices.

    The contrasted vectors are the per-cluster columns: column j of one
    view pairs positively with column j of the other, and all other
    columns of either view are negatives. Zero-norm columns are kept
    finite by the normalization guard.
    """
    q_a, q_b = as_tensor(q_a), as_tensor(q_b)
    if q_a.shape != q_b.shape:
        raise ShapeError(f"label_contrastive_pair: shapes differ, "
                         f"{q_a.shape} vs {q_b.shape}")
    if q_a.cols < 1:
        raise ValueError("label_contrastive_pair: need at least one cluster")
    return _nce_over_rows(transpose(q_a), transpose(q_b), temperature)


def assignment_entropy_penalty(q) -> Tensor2D:
    """Negative entropy of a view's mean cluster-usage distribution.

    With s_j the column mean of the assignment matrix, returns
    sum_j s_j log s_j, which lives in [-log K, 0] and discourages
    assigning every sample to one cluster.
    """
    q = as_tensor(q)
    s = col_mean(q)
    return sum_all(mul(s, log_clamped(s)))


def label_consistency_loss(qs, temperature: float = 1.0) -> Tensor2D:
    """Column-contrastive loss over all view pairs plus the entropy penalty."""
    if len(qs) < 2:
        raise ValueError(f"label_consistency_loss: need >= 2 views, got {len(qs)}")
    total = None
    for m in range(len(qs)):
        for n in range(len(qs)):
            if m == n:
                continue
            term = label_contrastive_pair(qs[m], qs[n], temperature)
            total = term if total is None else add(total, term)
    total = scale(total, 0.5)
    for q in qs:
        total = add(total, assignment_entropy_penalty(q))
    return total


def total_contrastive_loss(xs, xhats, hs, qs, cfg: ContrastiveConfig):
    """Weighted sum of the three second-stage objectives.

    Returns ``(total, components)`` where ``components`` maps each
    component name to its scalar value for logging.
    """
    l_rec = reconstruction_loss(xs, xhats)
    l_feat = feature_contrastive_total(hs, cfg.tau_feature)
    l_label = label_consistency_loss(qs, cfg.tau_label)
    total = add(l_rec, add(scale(l_feat, cfg.lambda_feature),
                           scale(l_label, cfg.lambda_label)))
    components = {
        "reconstruction": l_rec.item(),
        "feature_contrastive": l_feat.item(),
        "label_consistency": l_label.item(),
    }
    return total, components


def finetune_cross_entropy(targets, qs) -> Tensor2D:
    """Cross entropy between one-hot matched targets and soft assignments.

    ``targets`` holds one N x K one-hot matrix per view; rows must have
    exactly one entry equal to 1 and the rest 0.
    """
    if len(targets) != len(qs):
        raise ShapeError(f"finetune_cross_entropy: {len(targets)} target views "
                         f"vs {len(qs)} assignment views")
    total = None
    for m, (t, q) in enumerate(zip(targets, qs)):
        t_arr = np.asarray(t, dtype=np.float64)
        q = as_tensor(q)
        if t_arr.shape != q.shape:
            raise ShapeError(f"finetune_cross_entropy: view {m} shapes differ, "
                             f"{t_arr.shape} vs {q.shape}")
        one_hot = np.all((t_arr == 0.0) | (t_arr == 1.0)) and \
            np.all(t_arr.sum(axis=1) == 1.0)
        if not one_hot:
            raise ValueError(f"finetune_cross_entropy: view {m} targets are not one-hot")
        term = scale(sum_all(mul(Tensor2D(t_arr), log_clamped(q))), -1.0)
        total = term if total is None else add(total, term)
    return total
