import json
import os

import pytest

from mvclust.cli import main
from mvclust.config import RunConfig
from mvclust.errors import ConfigError

TINY_CONFIG = """\
n_samples=60
n_views=2
n_clusters=3
common_dim=3
private_dim=2
view_dims=7,9
private_strength=1.0
noise_sigma=0.05
latent_dim=5
high_dim=4
encoder_widths=12
pretrain_epochs=3
contrastive_epochs=3
finetune_epochs=3
batch_size=16
seed=0
"""


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "cfg.txt"
    path.write_text(TINY_CONFIG)
    return str(path)


@pytest.fixture
def tiny_dataset_dir(tmp_path, tiny_config):
    out = str(tmp_path / "data")
    assert main(["generate", "--config", tiny_config, "--out", out]) == 0
    return out


class TestRunConfig:
    def test_defaults_are_the_benchmark(self):
        cfg = RunConfig()
        assert cfg.n_samples == 1000 and cfg.n_clusters == 4
        assert cfg.view_dims == (50, 50) and cfg.private_strength == 2.0

    def test_parse_echo_round_trip(self):
        cfg = RunConfig.from_text(TINY_CONFIG)
        echoed = cfg.to_text()
        again = RunConfig.from_text(echoed)
        assert again == cfg
        assert RunConfig.from_text(again.to_text()) == again

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown key"):
            RunConfig.from_text("not_a_key=1\n")

    def test_duplicate_key_rejected(self):
        with pytest.raises(ConfigError, match="duplicate"):
            RunConfig.from_text("seed=1\nseed=2\n")

    def test_bad_value_rejected(self):
        with pytest.raises(ConfigError, match="seed"):
            RunConfig.from_text("seed=abc\n")
        with pytest.raises(ConfigError, match="use_high_level"):
            RunConfig.from_text("use_high_level=maybe\n")

    def test_comments_and_blanks_accepted(self):
        cfg = RunConfig.from_text("# a comment\n\nseed=9  # trailing\n")
        assert cfg.seed == 9

    def test_empty_tuple_value(self):
        cfg = RunConfig.from_text("label_hidden=\n")
        assert cfg.label_hidden == ()
        assert "label_hidden=\n" in cfg.to_text()

    def test_overrides(self):
        cfg = RunConfig().apply_overrides(["seed=5", "tau_feature=0.25"])
        assert cfg.seed == 5 and cfg.tau_feature == 0.25
        with pytest.raises(ConfigError):
            cfg.apply_overrides(["nonsense"])

    def test_validation_catches_inconsistency(self):
        with pytest.raises(ConfigError):
            RunConfig.from_text("n_views=3\n").validate()  # view_dims has 2


class TestGenerateCommand:
    def test_writes_documented_files(self, tmp_path, tiny_config, capsys):
        out = tmp_path / "ds"
        assert main(["generate", "--config", tiny_config, "--out", str(out)]) == 0
        for name in ("manifest.txt", "view_0.csv", "view_1.csv", "labels.csv",
                     "config.txt"):
            assert (out / name).exists()
        assert "60 samples, 2 views, 3 clusters" in capsys.readouterr().out

    def test_same_seed_byte_identical(self, tmp_path, tiny_config):
        a, b = tmp_path / "a", tmp_path / "b"
        main(["generate", "--config", tiny_config, "--out", str(a)])
        main(["generate", "--config", tiny_config, "--out", str(b)])
        for name in ("manifest.txt", "view_0.csv", "view_1.csv", "labels.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_unwritable_path_exits_2(self, tmp_path, tiny_config, capsys):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        code = main(["generate", "--config", tiny_config,
                     "--out", str(blocker / "nested")])
        assert code == 2
        assert "error" in capsys.readouterr().err

    def test_env_seed_override(self, tmp_path, tiny_config, monkeypatch):
        monkeypatch.setenv("MVCLUST_SEED", "123")
        out = tmp_path / "ds"
        main(["generate", "--config", tiny_config, "--out", str(out)])
        assert "seed=123" in (out / "config.txt").read_text()

    def test_cli_override_beats_file(self, tmp_path, tiny_config):
        out = tmp_path / "ds"
        main(["generate", "--config", tiny_config, "--out", str(out), "seed=7"])
        assert "seed=7" in (out / "config.txt").read_text()


class TestTrainCommand:
    def test_writes_all_outputs(self, tmp_path, tiny_config, tiny_dataset_dir,
                                capsys):
        out = tmp_path / "run"
        code = main(["train", "--config", tiny_config, "--data", tiny_dataset_dir,
                     "--out", str(out)])
        assert code == 0
        for name in ("model.ckpt", "train_log.csv", "labels.txt", "metrics.json",
                     "config.txt"):
            assert (out / name).exists()
        metrics = json.loads((out / "metrics.json").read_text())
        assert set(metrics) == {"acc", "nmi", "pur", "seed", "variant"}
        assert metrics["variant"] == "D"
        labels = (out / "labels.txt").read_text().splitlines()
        assert len(labels) == 60 and all(v.isdigit() for v in labels)

    def test_missing_labels_omits_metrics(self, tmp_path, tiny_config,
                                          tiny_dataset_dir):
        os.remove(os.path.join(tiny_dataset_dir, "labels.csv"))
        out = tmp_path / "run"
        assert main(["train", "--config", tiny_config, "--data", tiny_dataset_dir,
                     "--out", str(out)]) == 0
        assert not (out / "metrics.json").exists()
        assert (out / "labels.txt").exists()

    def test_rerun_is_byte_identical(self, tmp_path, tiny_config,
                                     tiny_dataset_dir):
        a, b = tmp_path / "a", tmp_path / "b"
        main(["train", "--config", tiny_config, "--data", tiny_dataset_dir,
              "--out", str(a)])
        main(["train", "--config", tiny_config, "--data", tiny_dataset_dir,
              "--out", str(b)])
        for name in ("labels.txt", "train_log.csv", "model.ckpt", "metrics.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_bad_dataset_dir_exits_2(self, tmp_path, tiny_config, capsys):
        code = main(["train", "--config", tiny_config,
                     "--data", str(tmp_path / "nope"), "--out", str(tmp_path / "o")])
        assert code == 2


class TestEvaluateCommand:
    def write_labels(self, path, values):
        path.write_text("".join(f"{v}\n" for v in values))

    def test_identical_files_score_one(self, tmp_path, capsys):
        p = tmp_path / "p.txt"
        self.write_labels(p, [0, 1, 2, 0])
        assert main(["evaluate", "--pred", str(p), "--truth", str(p)]) == 0
        scores = json.loads(capsys.readouterr().out.strip())
        assert scores == {"acc": 1.0, "nmi": 1.0, "pur": 1.0}

    def test_permutation_scores_full_accuracy(self, tmp_path, capsys):
        p, t = tmp_path / "p.txt", tmp_path / "t.txt"
        self.write_labels(p, [1, 1, 0, 0])
        self.write_labels(t, [0, 0, 1, 1])
        main(["evaluate", "--pred", str(p), "--truth", str(t)])
        assert json.loads(capsys.readouterr().out.strip())["acc"] == 1.0

    def test_independence_gives_zero_nmi(self, tmp_path, capsys):
        p, t = tmp_path / "p.txt", tmp_path / "t.txt"
        self.write_labels(p, [0, 1, 0, 1])
        self.write_labels(t, [0, 0, 1, 1])
        main(["evaluate", "--pred", str(p), "--truth", str(t)])
        assert json.loads(capsys.readouterr().out.strip())["nmi"] == 0.0

    def test_length_mismatch_exits_2(self, tmp_path, capsys):
        p, t = tmp_path / "p.txt", tmp_path / "t.txt"
        self.write_labels(p, [0, 1])
        self.write_labels(t, [0, 1, 1])
        assert main(["evaluate", "--pred", str(p), "--truth", str(t)]) == 2


class TestAblateCommand:
    def test_variant_d_matches_train(self, tmp_path, tiny_config,
                                     tiny_dataset_dir, capsys):
        out = tmp_path / "run"
        main(["train", "--config", tiny_config, "--data", tiny_dataset_dir,
              "--out", str(out)])
        trained = json.loads((out / "metrics.json").read_text())
        csv_path = tmp_path / "ablation.csv"
        code = main(["ablate", "--config", tiny_config, "--data", tiny_dataset_dir,
                     "--variants", "D", "--out", str(csv_path)])
        assert code == 0
        line = csv_path.read_text().splitlines()[1].split(",")
        assert line[0] == "D"
        assert float(line[2]) == pytest.approx(trained["acc"], abs=5e-7)

    def test_single_seed_mean_equals_run(self, tmp_path, tiny_config,
                                         tiny_dataset_dir, capsys):
        csv_path = tmp_path / "ablation.csv"
        main(["ablate", "--config", tiny_config, "--data", tiny_dataset_dir,
              "--variants", "A", "--seeds", "3", "--out", str(csv_path)])
        output = capsys.readouterr().out
        row_acc = float(csv_path.read_text().splitlines()[1].split(",")[2])
        mean_line = [l for l in output.splitlines() if l.strip().startswith("A")][-1]
        assert float(mean_line.split()[2]) == pytest.approx(row_acc, abs=5e-5)

    def test_unknown_variant_exits_2(self, tiny_config, tiny_dataset_dir, tmp_path):
        assert main(["ablate", "--config", tiny_config, "--data", tiny_dataset_dir,
                     "--variants", "Z", "--out", str(tmp_path / "x.csv")]) == 2


class TestGradcheckCommand:
    def test_default_seed_passes(self, capsys):
        assert main(["gradcheck", "--seeds", "0"]) == 0
        out = capsys.readouterr().out
        assert "all gradient checks passed" in out
        assert "PASS reconstruction" in out

    def test_corrupted_gradient_fails_naming_loss(self, capsys):
        assert main(["gradcheck", "--seeds", "0",
                     "--corrupt", "feature_contrastive"]) == 1
        out = capsys.readouterr().out
        assert "FAIL feature_contrastive" in out
