import itertools

import numpy as np
import pytest

from mvclust.clustering import (build_cost_matrix, final_labels,
                                hard_labels_from_q, kmeans, match_view,
                                modify_pseudo_labels, solve_assignment)
from mvclust.network import spawn_rng

from reference import brute_force_assignment


class TestKmeans:
    def test_forced_optimum_1d(self):
        points = np.array([[0.0], [0.1], [10.0], [10.1]])
        result = kmeans(points, 2, spawn_rng(0, 1))
        assert sorted(result.centroids.ravel().tolist()) == [0.05, 10.05]
        assert result.labels[0] == result.labels[1]
        assert result.labels[2] == result.labels[3]
        assert result.labels[0] != result.labels[2]

    def test_k_equals_one_gives_mean(self):
        rng = np.random.default_rng(0)
        points = rng.normal(size=(20, 3))
        result = kmeans(points, 1, spawn_rng(0, 2))
        np.testing.assert_allclose(result.centroids[0], points.mean(axis=0))
        assert result.objective == pytest.approx(
            ((points - points.mean(axis=0)) ** 2).sum())

    def test_k_equals_n_zero_objective(self):
        rng = np.random.default_rng(1)
        points = rng.normal(size=(6, 2))
        result = kmeans(points, 6, spawn_rng(0, 3))
        assert result.objective == pytest.approx(0.0, abs=1e-20)
        assert sorted(result.labels.tolist()) == list(range(6))

    def test_n_less_than_k_rejected(self):
        with pytest.raises(ValueError):
            kmeans(np.zeros((2, 2)), 3, spawn_rng(0, 4))

    def test_labels_index_nearest_centroid(self):
        rng = np.random.default_rng(2)
        points = rng.normal(size=(40, 3))
        result = kmeans(points, 4, spawn_rng(0, 5))
        d2 = ((points[:, None, :] - result.centroids[None]) ** 2).sum(axis=2)
        np.testing.assert_array_equal(result.labels, d2.argmin(axis=1))
        assert result.objective == pytest.approx(
            d2[np.arange(40), result.labels].sum())

    def test_duplicate_points_do_not_crash_seeding(self):
        points = np.zeros((5, 2))
        points[4] = [1.0, 1.0]
        result = kmeans(points, 3, spawn_rng(0, 6))
        assert result.objective >= 0.0

    def test_deterministic_given_rng_seed(self):
        rng_points = np.random.default_rng(3)
        points = rng_points.normal(size=(30, 4))
        a = kmeans(points, 3, spawn_rng(5, 7))
        b = kmeans(points, 3, spawn_rng(5, 7))
        np.testing.assert_array_equal(a.labels, b.labels)
        assert a.objective == b.objective


class TestHardLabels:
    def test_argmax(self):
        assert hard_labels_from_q([[0.1, 0.9]]).tolist() == [1]

    def test_tie_goes_to_lowest_index(self):
        assert hard_labels_from_q([[0.5, 0.5]]).tolist() == [0]

    def test_one_hot_recovery(self):
        q = np.eye(4)[[2, 0, 3, 1]]
        assert hard_labels_from_q(q).tolist() == [2, 0, 3, 1]


class TestCostMatrix:
    def test_counts_and_costs(self):
        cost = build_cost_matrix([0, 0, 1, 1], [1, 1, 0, 0], 2)
        np.testing.assert_array_equal(cost, [[2.0, 0.0], [0.0, 2.0]])

    def test_perfect_agreement_zero_diagonal(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            labels = rng.integers(0, 3, size=20)
            cost = build_cost_matrix(labels, labels, 3)
            counts = cost.max() - cost
            # diagonal carries all mass, so diagonal costs are minimal
            assert counts.sum() == 20
            assert np.all(counts == np.diag(np.diag(counts)))

    def test_empty_input(self):
        np.testing.assert_array_equal(build_cost_matrix([], [], 2), np.zeros((2, 2)))

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            build_cost_matrix([0, 2], [0, 1], 2)


class TestSolveAssignment:
    def test_diagonal_optimum(self):
        perm = solve_assignment([[0.0, 5.0], [5.0, 0.0]])
        assert perm.tolist() == [0, 1]

    def test_two_by_two_cross(self):
        perm = solve_assignment([[4.0, 1.0], [2.0, 3.0]])
        assert perm.tolist() == [1, 0]

    def test_matches_brute_force_on_random_matrices(self):
        rng = np.random.default_rng(5)
        for k in range(2, 8):
            for _ in range(15):
                cost = rng.uniform(0, 10, size=(k, k))
                perm = solve_assignment(cost)
                _, best = brute_force_assignment(cost)
                ours = cost[np.arange(k), perm].sum()
                assert ours == pytest.approx(best, abs=1e-9)

    def test_lexicographic_tie_break(self):
        rng = np.random.default_rng(6)
        for _ in range(40):
            k = int(rng.integers(2, 6))
            cost = rng.integers(0, 3, size=(k, k)).astype(float)
            perm = solve_assignment(cost)
            ref_perm, ref_cost = brute_force_assignment(cost)
            assert cost[np.arange(k), perm].sum() == pytest.approx(ref_cost)
            assert perm.tolist() == ref_perm.tolist()

    def test_non_square_rejected(self):
        with pytest.raises(ValueError):
            solve_assignment(np.zeros((2, 3)))

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            solve_assignment([[-1.0, 0.0], [0.0, 1.0]])


class TestModifyPseudoLabels:
    def test_identity_assignment(self):
        targets = modify_pseudo_labels([0, 1, 2, 1], np.arange(3), 3)
        assert targets.argmax(axis=1).tolist() == [0, 1, 2, 1]
        assert np.all(targets.sum(axis=1) == 1.0)

    def test_worked_example_agrees_with_head_labels(self):
        # head labels [0,0,1,1], k-means labels [1,1,0,0]: matching swaps
        cost = build_cost_matrix([0, 0, 1, 1], [1, 1, 0, 0], 2)
        assignment = solve_assignment(cost)
        targets = modify_pseudo_labels([1, 1, 0, 0], assignment, 2)
        assert targets.argmax(axis=1).tolist() == [0, 0, 1, 1]

    def test_modify_with_inverse_recovers(self):
        rng = np.random.default_rng(7)
        k = 5
        perm = rng.permutation(k)
        inverse = np.argsort(perm)
        labels = rng.integers(0, k, size=30)
        once = modify_pseudo_labels(labels, perm, k).argmax(axis=1)
        twice = modify_pseudo_labels(once, inverse, k).argmax(axis=1)
        assert twice.tolist() == labels.tolist()

    def test_non_permutation_rejected(self):
        with pytest.raises(ValueError):
            modify_pseudo_labels([0, 1], np.array([0, 0]), 2)

    def test_matched_agreement_is_maximal_over_permutations(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            k = int(rng.integers(2, 6))
            n = 30
            q = rng.dirichlet(np.ones(k), size=n)
            km_labels = rng.integers(0, k, size=n)
            head = hard_labels_from_q(q)
            match = match_view(q, km_labels, k)
            achieved = (match.matched_targets.argmax(axis=1) == head).sum()
            best = max(sum(1 for i in range(n) if sigma[km_labels[i]] == head[i])
                       for sigma in itertools.permutations(range(k)))
            assert achieved == best


class TestFinalLabels:
    def test_mean_argmax(self):
        y = final_labels([np.array([[0.6, 0.4]]), np.array([[0.3, 0.7]])])
        assert y.tolist() == [1]

    def test_identical_views_reduce_to_argmax(self):
        rng = np.random.default_rng(9)
        q = rng.dirichlet(np.ones(4), size=10)
        np.testing.assert_array_equal(final_labels([q, q, q]), q.argmax(axis=1))

    def test_single_view(self):
        q = np.array([[0.2, 0.8], [0.9, 0.1]])
        np.testing.assert_array_equal(final_labels([q]), hard_labels_from_q(q))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            final_labels([np.zeros((2, 2)), np.zeros((3, 2))])

    def test_column_permutation_equivariance(self):
        rng = np.random.default_rng(10)
        qs = [rng.dirichlet(np.ones(4), size=12) for _ in range(3)]
        perm = rng.permutation(4)
        base = final_labels(qs)
        permuted = final_labels([q[:, perm] for q in qs])
        np.testing.assert_array_equal(perm[permuted], base)
