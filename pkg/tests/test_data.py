import numpy as np
import pytest

from mvclust.clustering import kmeans
from mvclust.data import (MultiViewDataset, SyntheticConfig, generate_synthetic,
                          load_dataset, minibatch_iter, save_dataset)
from mvclust.errors import DataFormatError
from mvclust.metrics import accuracy
from mvclust.network import spawn_rng


def small_cfg(**kwargs):
    defaults = dict(n_samples=60, n_views=2, n_clusters=3, common_dim=3,
                    private_dim=2, view_dims=(8, 11), private_strength=1.0,
                    noise_sigma=0.05, seed=0)
    defaults.update(kwargs)
    return SyntheticConfig(**defaults)


class TestGenerator:
    def test_same_seed_bit_identical(self):
        a = generate_synthetic(small_cfg())
        b = generate_synthetic(small_cfg())
        for va, vb in zip(a.views, b.views):
            assert va.tobytes() == vb.tobytes()
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_noiseless_private_free_views_are_separable(self):
        cfg = small_cfg(private_strength=0.0, noise_sigma=0.0, n_samples=90)
        ds = generate_synthetic(cfg)
        for m in range(ds.n_views):
            km = kmeans(ds.views[m], ds.n_clusters, spawn_rng(1, m))
            assert accuracy(km.labels, ds.labels) == 1.0

    def test_one_sample_per_cluster_is_permutation(self):
        ds = generate_synthetic(small_cfg(n_samples=3, n_clusters=3))
        assert sorted(ds.labels.tolist()) == [0, 1, 2]

    def test_private_strength_changes_views_not_labels(self):
        weak = generate_synthetic(small_cfg(private_strength=0.5))
        strong = generate_synthetic(small_cfg(private_strength=5.0))
        np.testing.assert_array_equal(weak.labels, strong.labels)
        assert any(not np.array_equal(a, b)
                   for a, b in zip(weak.views, strong.views))

    def test_every_cluster_populated(self):
        ds = generate_synthetic(small_cfg(n_samples=10, n_clusters=4,
                                          view_dims=(8, 11)))
        assert set(ds.labels.tolist()) == {0, 1, 2, 3}

    def test_invalid_configs_rejected(self):
        with pytest.raises(ValueError):
            generate_synthetic(small_cfg(n_clusters=1))
        with pytest.raises(ValueError):
            generate_synthetic(small_cfg(view_dims=(8,)))
        with pytest.raises(ValueError):
            generate_synthetic(small_cfg(private_strength=-1.0))
        with pytest.raises(ValueError):
            generate_synthetic(small_cfg(n_samples=2, n_clusters=3))


class TestDatasetType:
    def test_row_alignment_enforced(self):
        with pytest.raises(DataFormatError, match="rows"):
            MultiViewDataset([np.zeros((4, 2)), np.zeros((3, 2))], None, 2)

    def test_label_length_enforced(self):
        with pytest.raises(DataFormatError):
            MultiViewDataset([np.zeros((4, 2))], np.zeros(3, dtype=int), 2)

    def test_label_range_enforced(self):
        with pytest.raises(ValueError):
            MultiViewDataset([np.zeros((2, 2))], np.array([0, 5]), 2)


class TestRoundTrip:
    def test_save_load_exact(self, tmp_path):
        ds = generate_synthetic(small_cfg())
        save_dataset(ds, tmp_path / "ds")
        loaded = load_dataset(tmp_path / "ds")
        assert loaded.n_clusters == ds.n_clusters
        for a, b in zip(ds.views, loaded.views):
            np.testing.assert_array_equal(a, b)
        np.testing.assert_array_equal(ds.labels, loaded.labels)

    def test_missing_labels_file_means_absent_labels(self, tmp_path):
        ds = generate_synthetic(small_cfg())
        save_dataset(ds, tmp_path / "ds")
        (tmp_path / "ds" / "labels.csv").unlink()
        loaded = load_dataset(tmp_path / "ds")
        assert loaded.labels is None

    def test_row_count_disagreement_names_both_counts(self, tmp_path):
        ds = generate_synthetic(small_cfg())
        save_dataset(ds, tmp_path / "ds")
        view1 = (tmp_path / "ds" / "view_1.csv").read_text().splitlines()
        (tmp_path / "ds" / "view_1.csv").write_text("\n".join(view1[:-1]) + "\n")
        with pytest.raises(DataFormatError, match="60.*59"):
            load_dataset(tmp_path / "ds")

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(DataFormatError, match="manifest"):
            load_dataset(tmp_path)

    def test_malformed_rows(self, tmp_path):
        ds = generate_synthetic(small_cfg())
        save_dataset(ds, tmp_path / "ds")
        path = tmp_path / "ds" / "view_0.csv"
        path.write_text(path.read_text().replace("0.", "x.", 1))
        with pytest.raises(DataFormatError, match="view_0.csv"):
            load_dataset(tmp_path / "ds")

    def test_manifest_contents(self, tmp_path):
        ds = generate_synthetic(small_cfg())
        save_dataset(ds, tmp_path / "ds")
        text = (tmp_path / "ds" / "manifest.txt").read_text()
        assert "views=2" in text and "samples=60" in text
        assert "clusters=3" in text and "dim_0=8" in text and "dim_1=11" in text


class TestMinibatchIter:
    def test_full_batch_is_one_shuffle(self):
        batches = list(minibatch_iter(10, 10, spawn_rng(0, 1)))
        assert len(batches) == 1
        assert sorted(batches[0].tolist()) == list(range(10))

    def test_final_short_batch_kept(self):
        sizes = [len(b) for b in minibatch_iter(5, 2, spawn_rng(0, 2))]
        assert sizes == [2, 2, 1]

    def test_epoch_is_exact_partition(self):
        seen = np.concatenate(list(minibatch_iter(23, 4, spawn_rng(0, 3))))
        assert sorted(seen.tolist()) == list(range(23))

    def test_bad_batch_size_rejected(self):
        with pytest.raises(ValueError):
            list(minibatch_iter(4, 0, spawn_rng(0, 4)))
        with pytest.raises(ValueError):
            list(minibatch_iter(4, 5, spawn_rng(0, 5)))

    def test_accepts_dataset_or_count(self):
        ds = generate_synthetic(small_cfg())
        via_ds = [b.tolist() for b in minibatch_iter(ds, 16, spawn_rng(2, 0))]
        via_n = [b.tolist() for b in minibatch_iter(60, 16, spawn_rng(2, 0))]
        assert via_ds == via_n

    def test_deterministic_given_rng(self):
        a = [b.tolist() for b in minibatch_iter(12, 5, spawn_rng(7, 0))]
        b = [b.tolist() for b in minibatch_iter(12, 5, spawn_rng(7, 0))]
        assert a == b
