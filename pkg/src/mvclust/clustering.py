"""K-means, assignment matching, and label rules.

The matching step relabels each view's K-means clusters so they agree
maximally with the clusters implied by the label head: a co-occurrence
matrix between the two labelings becomes a cost matrix (max count minus
count), a minimum-cost assignment is solved exactly, and the K-means
labels are rewritten through the resulting permutation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class KmeansResult:
    centroids: np.ndarray  # (K, D)
    labels: np.ndarray     # (N,) ints in [0, K)
    objective: float       # sum of squared distances to assigned centroids


@dataclass
class MatchResult:
    cost_matrix: np.ndarray      # (K, K), entries >= 0
    assignment: np.ndarray       # permutation: assignment[k] = matched column of row k
    matched_targets: np.ndarray  # (N, K) one-hot rows


def _pairwise_sq_dists(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    d2 = (points * points).sum(axis=1)[:, None] \
        + (centroids * centroids).sum(axis=1)[None, :] \
        - 2.0 * points @ centroids.T
    np.maximum(d2, 0.0, out=d2)
    return d2


def _seed_centroids(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Distance-weighted (k-means++ style) seeding."""
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]))
    centroids[0] = points[rng.integers(n)]
    d2 = ((points - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centroids[j] = points[idx]
        d2 = np.minimum(d2, ((points - centroids[j]) ** 2).sum(axis=1))
    return centroids


def _lloyd(points: np.ndarray, k: int, rng: np.random.Generator,
           max_iter: int) -> KmeansResult:
    centroids = _seed_centroids(points, k, rng)
    prev_labels = None
    prev_obj = np.inf
    n = points.shape[0]
    rows = np.arange(n)
    for _ in range(max_iter):
        d2 = _pairwise_sq_dists(points, centroids)
        labels = d2.argmin(axis=1)
        obj = float(d2[rows, labels].sum())
        # Lloyd steps never increase the objective (small fp slack).
        assert obj <= prev_obj + 1e-9 * max(1.0, prev_obj), \
            f"k-means objective increased: {prev_obj} -> {obj}"
        if prev_labels is not None and np.array_equal(labels, prev_labels):
            return KmeansResult(centroids, labels, obj)
        prev_labels, prev_obj = labels, obj
        new_centroids = np.empty_like(centroids)
        counts = np.bincount(labels, minlength=k)
        for j in range(k):
            if counts[j] > 0:
                new_centroids[j] = points[labels == j].mean(axis=0)
        empties = np.flatnonzero(counts == 0)
        if empties.size:
            # Re-seed each empty cluster at the point farthest from its
            # current centroid, farthest-first over distinct points.
            dist_to_own = d2[rows, labels].copy()
            for j in empties:
                far = int(dist_to_own.argmax())
                new_centroids[j] = points[far]
                dist_to_own[far] = -1.0
        centroids = new_centroids
    d2 = _pairwise_sq_dists(points, centroids)
    labels = d2.argmin(axis=1)
    return KmeansResult(centroids, labels, float(d2[rows, labels].sum()))


def kmeans(points, n_clusters: int, rng: np.random.Generator,
           max_iter: int = 300, n_restarts: int = 10) -> KmeansResult:
    """Best of ``n_restarts`` seeded Lloyd runs, by final objective."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise ValueError(f"kmeans: expected a 2-D array, got shape {points.shape}")
    n = points.shape[0]
    if n_clusters < 1 or n < n_clusters:
        raise ValueError(f"kmeans: need 1 <= n_clusters <= n_samples, "
                         f"got n_clusters={n_clusters}, n_samples={n}")
    best = None
    for _ in range(max(1, n_restarts)):
        result = _lloyd(points, n_clusters, rng, max_iter)
        if best is None or result.objective < best.objective:
            best = result
    return best


def hard_labels_from_q(q) -> np.ndarray:
    """Per-row argmax of an assignment matrix; ties go to the lowest index."""
    q = np.asarray(q, dtype=np.float64)
    return q.argmax(axis=1)


def build_cost_matrix(head_labels, kmeans_labels, n_clusters: int) -> np.ndarray:
    """Cost matrix from the co-occurrence counts of two labelings.

    Entry (i, j) counts samples labeled i by the label head and j by
    K-means; the returned cost is (max count - count), so minimizing the
    assignment cost maximizes total agreement.
    """
    head_labels = np.asarray(head_labels, dtype=np.int64)
    kmeans_labels = np.asarray(kmeans_labels, dtype=np.int64)
    if head_labels.shape != kmeans_labels.shape:
        raise ValueError(f"build_cost_matrix: label lengths differ, "
                         f"{head_labels.shape} vs {kmeans_labels.shape}")
    for name, arr in (("head", head_labels), ("kmeans", kmeans_labels)):
        if arr.size and (arr.min() < 0 or arr.max() >= n_clusters):
            raise ValueError(f"build_cost_matrix: {name} labels outside "
                             f"[0, {n_clusters})")
    counts = np.zeros((n_clusters, n_clusters), dtype=np.float64)
    np.add.at(counts, (head_labels, kmeans_labels), 1.0)
    return counts.max() - counts if counts.size else counts


def _min_cost_matching(cost: np.ndarray) -> np.ndarray:
    """Exact minimum-cost perfect matching via shortest augmenting paths.

    O(n^3): rows are inserted one at a time and each insertion grows the
    matching along a cheapest augmenting path over the reduced costs.
    """
    n = cost.shape[0]
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    match = np.zeros(n + 1, dtype=np.int64)  # match[j] = row on column j (1-based, 0 free)
    way = np.zeros(n + 1, dtype=np.int64)
    for i in range(1, n + 1):
        match[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = match[j0]
            delta = np.inf
            j1 = 0
            for j in range(1, n + 1):
                if used[j]:
                    continue
                cur = cost[i0 - 1, j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[match[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if match[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match[j0] = match[j1]
            j0 = j1
    perm = np.zeros(n, dtype=np.int64)
    for j in range(1, n + 1):
        perm[match[j] - 1] = j - 1
    return perm


def solve_assignment(cost) -> np.ndarray:
    """Minimum-cost row-to-column permutation of a square cost matrix.

    Among all optimal permutations, returns the lexicographically
    smallest (row 0's column minimized first, then row 1's, ...).
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise ValueError(f"solve_assignment: matrix must be square, got {cost.shape}")
    if not np.all(np.isfinite(cost)):
        raise ValueError("solve_assignment: cost matrix has non-finite entries")
    if cost.size and cost.min() < 0:
        raise ValueError("solve_assignment: cost matrix has negative entries")
    n = cost.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    base = _min_cost_matching(cost)
    best = float(cost[np.arange(n), base].sum())
    tol = 1e-9 * max(1.0, abs(best))

    # Fix one row at a time to its smallest column that still admits an
    # optimal completion; each probe solves the remaining subproblem.
    perm = np.empty(n, dtype=np.int64)
    free_cols = list(range(n))
    prefix = 0.0
    for i in range(n):
        rest_rows = np.arange(i + 1, n)
        chosen = -1
        for j in free_cols:
            candidate = prefix + cost[i, j]
            if candidate > best + tol:
                continue
            remaining = [c for c in free_cols if c != j]
            if rest_rows.size:
                sub = cost[np.ix_(rest_rows, remaining)]
                sub_perm = _min_cost_matching(sub)
                candidate += float(sub[np.arange(rest_rows.size), sub_perm].sum())
            if candidate <= best + tol:
                chosen = j
                break
        if chosen < 0:
            raise RuntimeError("solve_assignment: failed to extend an optimal prefix")
        perm[i] = chosen
        prefix += cost[i, chosen]
        free_cols.remove(chosen)
    return perm


def modify_pseudo_labels(kmeans_labels, assignment, n_clusters: int) -> np.ndarray:
    """Rewrite K-means labels into the label head's cluster indexing.

    A sample whose K-means label is s becomes one-hot at the row k that
    the assignment maps to column s.
    """
    assignment = np.asarray(assignment, dtype=np.int64)
    kmeans_labels = np.asarray(kmeans_labels, dtype=np.int64)
    if sorted(assignment.tolist()) != list(range(n_clusters)):
        raise ValueError(f"modify_pseudo_labels: assignment {assignment.tolist()} "
                         f"is not a permutation of 0..{n_clusters - 1}")
    inverse = np.empty(n_clusters, dtype=np.int64)
    inverse[assignment] = np.arange(n_clusters)
    hot = inverse[kmeans_labels]
    targets = np.zeros((kmeans_labels.shape[0], n_clusters))
    targets[np.arange(kmeans_labels.shape[0]), hot] = 1.0
    return targets


def match_view(q, kmeans_labels, n_clusters: int) -> MatchResult:
    """Full matching step for one view: costs, assignment, one-hot targets."""
    head_labels = hard_labels_from_q(q)
    cost = build_cost_matrix(head_labels, kmeans_labels, n_clusters)
    assignment = solve_assignment(cost)
    targets = modify_pseudo_labels(kmeans_labels, assignment, n_clusters)
    return MatchResult(cost, assignment, targets)


def final_labels(qs) -> np.ndarray:
    """Argmax over the view-averaged assignment matrix; ties to lowest index."""
    mats = [np.asarray(q, dtype=np.float64) for q in qs]
    if not mats:
        raise ValueError("final_labels: need at least one view")
    for m, q in enumerate(mats[1:], start=1):
        if q.shape != mats[0].shape:
            raise ValueError(f"final_labels: view {m} shape {q.shape} differs "
                             f"from view 0 shape {mats[0].shape}")
    mean = np.mean(mats, axis=0)
    return mean.argmax(axis=1)
