"""Clustering evaluation: accuracy under the best label bijection,
normalized mutual information, and purity.

Label ids may be any non-negative integers; they are compacted before
counting. NMI uses the arithmetic mean of the two entropies as the
normalizer, with 0/0 defined as 0.
"""

from __future__ import annotations

import numpy as np

from .clustering import solve_assignment


def _check_pair(pred, truth):
    pred = np.asarray(pred, dtype=np.int64).ravel()
    truth = np.asarray(truth, dtype=np.int64).ravel()
    if pred.shape != truth.shape:
        raise ValueError(f"label vectors differ in length, {pred.shape[0]} vs "
                         f"{truth.shape[0]}")
    if pred.size == 0:
        raise ValueError("label vectors are empty")
    return pred, truth


def _contingency(pred, truth):
    _, pred_c = np.unique(pred, return_inverse=True)
    _, truth_c = np.unique(truth, return_inverse=True)
    table = np.zeros((pred_c.max() + 1, truth_c.max() + 1))
    np.add.at(table, (pred_c, truth_c), 1.0)
    return table


def accuracy(pred, truth) -> float:
    """Fraction of agreements under the best one-to-one cluster-to-class map."""
    pred, truth = _check_pair(pred, truth)
    table = _contingency(pred, truth)
    k = max(table.shape)
    square = np.zeros((k, k))
    square[:table.shape[0], :table.shape[1]] = table
    mapping = solve_assignment(square.max() - square)
    matched = square[np.arange(k), mapping].sum()
    return float(matched / pred.size)


def nmi(pred, truth) -> float:
    """Mutual information normalized by the mean of the two entropies."""
    pred, truth = _check_pair(pred, truth)
    table = _contingency(pred, truth)
    n = pred.size
    joint = table / n
    p_pred = joint.sum(axis=1)
    p_truth = joint.sum(axis=0)
    nonzero = joint > 0
    outer = p_pred[:, None] * p_truth[None, :]
    mi = float((joint[nonzero] * np.log(joint[nonzero] / outer[nonzero])).sum())
    h_pred = float(-(p_pred[p_pred > 0] * np.log(p_pred[p_pred > 0])).sum())
    h_truth = float(-(p_truth[p_truth > 0] * np.log(p_truth[p_truth > 0])).sum())
    denom = 0.5 * (h_pred + h_truth)
    if denom == 0.0:
        return 0.0
    return mi / denom


def purity(pred, truth) -> float:
    """Mean over samples of the majority-class fraction of their cluster."""
    pred, truth = _check_pair(pred, truth)
    table = _contingency(pred, truth)
    return float(table.max(axis=1).sum() / pred.size)


def evaluate(pred, truth) -> dict[str, float]:
    """All three metrics as a dict with keys acc, nmi, pur."""
    return {"acc": accuracy(pred, truth),
            "nmi": nmi(pred, truth),
            "pur": purity(pred, truth)}
