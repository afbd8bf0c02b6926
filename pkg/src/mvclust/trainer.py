"""Three-stage training pipeline and the ablation harness.

Stage 1 pretrains the autoencoders on reconstruction alone. Stage 2
jointly optimizes reconstruction plus the two contrastive consistency
objectives. Stage 3 runs K-means on the high-level features of each
view, aligns the K-means clusters with the label head's clusters via
assignment matching, and fine-tunes encoders and label head with cross
entropy against the matched one-hot targets. Gradient isolation between
parameter groups is structural: each stage's loss graph simply never
touches the frozen groups.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .clustering import MatchResult, final_labels, kmeans, match_view
from .data import MultiViewDataset, minibatch_iter
from .errors import NumericalError
from .losses import (ContrastiveConfig, feature_contrastive_total,
                     finetune_cross_entropy, label_consistency_loss,
                     reconstruction_loss)
from .metrics import evaluate
from .network import MultiViewNetwork, spawn_rng
from .optim import Adam
from .tensor import LOG_EPS, NORM_EPS, Tensor2D, add, no_grad, scale


@dataclass
class AblationFlags:
    """Switches selecting which objectives are active.

    ``use_high_level`` controls both the feature-contrastive objective
    and the whole matching/fine-tuning stage; ``contrast_on_low``
    additionally applies the feature-contrastive loss to the latent
    codes themselves (structure-ablation variants b and c).
    """

    use_reconstruction: bool = True
    use_high_level: bool = True
    contrast_on_low: bool = False
    contrast_on_labels: bool = True

    def validate(self) -> "AblationFlags":
        if not (self.use_reconstruction or self.use_high_level
                or self.contrast_on_low or self.contrast_on_labels):
            raise ValueError("AblationFlags: at least one objective must be enabled")
        return self


ABLATION_VARIANTS = {
    # Loss-component ablations: assignment contrast always on.
    "A": AblationFlags(False, False, False, True),
    "B": AblationFlags(True, False, False, True),
    "C": AblationFlags(False, True, False, True),
    "D": AblationFlags(True, True, False, True),
    # Contrastive-structure ablations: where the contrast is applied.
    "a": AblationFlags(False, False, False, True),
    "b": AblationFlags(True, False, True, True),
    "c": AblationFlags(True, True, True, True),
    "d": AblationFlags(True, True, False, True),
}


@dataclass
class TrainConfig:
    """All hyperparameters of one pipeline run."""

    pretrain_epochs: int = 100
    contrastive_epochs: int = 50
    finetune_epochs: int = 50
    batch_size: int = 256
    learning_rate: float = 1e-3
    latent_dim: int = 64
    high_dim: int = 32
    encoder_widths: tuple[int, ...] = (256, 128)
    label_hidden: tuple[int, ...] = ()
    matching_refresh_every: int = 0
    contrastive: ContrastiveConfig = field(default_factory=ContrastiveConfig)
    ablation: AblationFlags = field(default_factory=AblationFlags)
    seed: int = 0

    def validate(self) -> "TrainConfig":
        if min(self.pretrain_epochs, self.contrastive_epochs,
               self.finetune_epochs) < 0:
            raise ValueError("epoch counts must be >= 0")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.matching_refresh_every < 0:
            raise ValueError("matching_refresh_every must be >= 0")
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")
        self.contrastive.validate()
        self.ablation.validate()
        return self


@dataclass
class EpochRecord:
    stage: str
    epoch: int
    reconstruction: float | None = None
    feature_contrastive: float | None = None
    label_consistency: float | None = None
    low_contrastive: float | None = None
    finetune: float | None = None
    positive_cosine: float | None = None
    acc: float | None = None
    nmi: float | None = None
    pur: float | None = None


class TrainLog:
    """Per-epoch training records; serializes to CSV in a fixed column order."""

    COLUMNS = [f.name for f in fields(EpochRecord)]

    def __init__(self):
        self.records: list[EpochRecord] = []

    def append(self, record: EpochRecord) -> None:
        self.records.append(record)

    def stage_records(self, stage: str) -> list[EpochRecord]:
        return [r for r in self.records if r.stage == stage]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self.COLUMNS)
            for r in self.records:
                row = []
                for col in self.COLUMNS:
                    value = getattr(r, col)
                    if value is None:
                        row.append("")
                    elif isinstance(value, float):
                        row.append(repr(value))
                    else:
                        row.append(str(value))
                writer.writerow(row)


@dataclass
class PipelineResult:
    network: MultiViewNetwork
    log: TrainLog
    labels: np.ndarray
    matches: list[MatchResult] | None


def _check_finite(name: str, value: float, stage: str, epoch: int) -> float:
    if not np.isfinite(value):
        raise NumericalError(f"{name} loss became non-finite ({value}) in stage "
                             f"{stage!r}, epoch {epoch}")
    return value


def _batch_tensors(views, idx) -> list[Tensor2D]:
    return [Tensor2D(v[idx]) for v in views]


def _normalize_np(x: np.ndarray) -> np.ndarray:
    return x / (np.linalg.norm(x, axis=1, keepdims=True) + NORM_EPS)


def _nce_values(a: np.ndarray, b: np.ndarray, tau: float) -> tuple[float, float]:
    """Both ordered contrastive pair losses from shared similarity matrices.

    Plain-numpy twin of ``losses._nce_over_rows`` for cheap full-batch
    logging; agreement between the two paths is covered by tests.
    """
    an, bn = _normalize_np(a), _normalize_np(b)
    n = an.shape[0]
    e_ab = np.exp(an @ bn.T / tau)
    e_aa = np.exp(an @ an.T / tau)
    e_bb = np.exp(bn @ bn.T / tau)
    np.fill_diagonal(e_aa, 0.0)
    np.fill_diagonal(e_bb, 0.0)
    pos = np.maximum(np.diag(e_ab), LOG_EPS)
    loss_ab = float(-(np.log(pos) - np.log(np.maximum(
        e_ab.sum(axis=1) + e_aa.sum(axis=1), LOG_EPS))).sum() / n)
    loss_ba = float(-(np.log(pos) - np.log(np.maximum(
        e_ab.sum(axis=0) + e_bb.sum(axis=1), LOG_EPS))).sum() / n)
    return loss_ab, loss_ba


def _contrastive_sum(mats: list[np.ndarray], tau: float) -> float:
    total = 0.0
    for m in range(len(mats)):
        for n in range(m + 1, len(mats)):
            loss_mn, loss_nm = _nce_values(mats[m], mats[n], tau)
            total += loss_mn + loss_nm
    return 0.5 * total


def full_batch_losses(net: MultiViewNetwork, ds: MultiViewDataset,
                      cfg: TrainConfig,
                      finetune_targets: list[np.ndarray] | None = None) -> dict:
    """Evaluate all objectives (and diagnostics) on the whole dataset."""
    contrast = cfg.contrastive
    with no_grad():
        zs = [net.encode(m, ds.views[m]).values for m in range(ds.n_views)]
        xhats = [net.decode(m, z).values for m, z in enumerate(zs)]
        hs = [net.high_level(z).values for z in zs]
        qs = [net.soft_assign(z).values for z in zs]

    recon = float(sum(((xh - x) ** 2).sum() for xh, x in zip(xhats, ds.views)))
    feature = _contrastive_sum(hs, contrast.tau_feature) if ds.n_views >= 2 else None
    low = (_contrastive_sum(zs, contrast.tau_feature)
           if cfg.ablation.contrast_on_low and ds.n_views >= 2 else None)

    label = None
    if ds.n_views >= 2:
        label = _contrastive_sum([q.T for q in qs], contrast.tau_label)
        for q in qs:
            s = np.maximum(q.mean(axis=0), LOG_EPS)
            label += float((s * np.log(s)).sum())

    finetune = None
    if finetune_targets is not None:
        finetune = float(-sum((t * np.log(np.maximum(q, LOG_EPS))).sum()
                              for t, q in zip(finetune_targets, qs)))

    normed = [_normalize_np(h) for h in hs]
    pairs = [(normed[m] * normed[n]).sum(axis=1).mean()
             for m in range(ds.n_views) for n in range(m + 1, ds.n_views)]
    pos_cos = float(np.mean(pairs)) if pairs else None

    out = {"reconstruction": recon, "feature_contrastive": feature,
           "label_consistency": label, "low_contrastive": low,
           "finetune": finetune, "positive_cosine": pos_cos,
           "assignments": qs}
    return out


def _record_epoch(net, ds, cfg, log: TrainLog | None, stage: str, epoch: int,
                  finetune_targets=None) -> None:
    if log is None:
        return
    state = full_batch_losses(net, ds, cfg, finetune_targets)
    record = EpochRecord(stage=stage, epoch=epoch,
                         reconstruction=state["reconstruction"],
                         feature_contrastive=state["feature_contrastive"],
                         label_consistency=state["label_consistency"],
                         low_contrastive=state["low_contrastive"],
                         finetune=state["finetune"],
                         positive_cosine=state["positive_cosine"])
    if ds.labels is not None:
        scores = evaluate(final_labels(state["assignments"]), ds.labels)
        record.acc, record.nmi, record.pur = (scores["acc"], scores["nmi"],
                                              scores["pur"])
    log.append(record)


def _stage_optimizer(params, lr: float) -> Adam:
    # Each stage optimizes a new objective, so moments restart at zero.
    opt = Adam(params, lr=lr)
    for p in params:
        p.first_moment[...] = 0.0
        p.second_moment[...] = 0.0
        p.step_count = 0
    return opt


def pretrain(net: MultiViewNetwork, ds: MultiViewDataset, cfg: TrainConfig,
             log: TrainLog | None = None) -> MultiViewNetwork:
    """Minimize reconstruction over encoders and decoders only."""
    params = []
    for m in range(net.n_views):
        params += net.encoder_params(m) + net.decoder_params(m)
    opt = _stage_optimizer(params, cfg.learning_rate)
    rng = spawn_rng(cfg.seed, 1)
    batch = min(cfg.batch_size, ds.n_samples)
    _record_epoch(net, ds, cfg, log, "pretrain", 0)
    for epoch in range(1, cfg.pretrain_epochs + 1):
        for idx in minibatch_iter(ds, batch, rng):
            xs = _batch_tensors(ds.views, idx)
            zs = [net.encode(m, x) for m, x in enumerate(xs)]
            xhats = [net.decode(m, z) for m, z in enumerate(zs)]
            loss = reconstruction_loss(xs, xhats)
            _check_finite("reconstruction", loss.item(), "pretrain", epoch)
            opt.zero_grad()
            loss.backward()
            opt.step()
        _record_epoch(net, ds, cfg, log, "pretrain", epoch)
    return net


def contrastive_train(net: MultiViewNetwork, ds: MultiViewDataset,
                      cfg: TrainConfig, log: TrainLog | None = None
                      ) -> MultiViewNetwork:
    """Optimize the joint objective selected by the ablation flags.

    Only parameter groups on an active loss path are registered with the
    optimizer, so disabled heads stay bit-identical to their state at
    stage entry.
    """
    flags = cfg.ablation
    contrast = cfg.contrastive
    params = []
    for m in range(net.n_views):
        params += net.encoder_params(m)
        if flags.use_reconstruction:
            params += net.decoder_params(m)
    if flags.use_high_level:
        params += net.feature_head_params()
    if flags.contrast_on_labels:
        params += net.label_head_params()
    opt = _stage_optimizer(params, cfg.learning_rate)
    rng = spawn_rng(cfg.seed, 2)
    batch = min(cfg.batch_size, ds.n_samples)
    _record_epoch(net, ds, cfg, log, "contrastive", 0)
    for epoch in range(1, cfg.contrastive_epochs + 1):
        for idx in minibatch_iter(ds, batch, rng):
            xs = _batch_tensors(ds.views, idx)
            zs = [net.encode(m, x) for m, x in enumerate(xs)]
            total = None

            def accumulate(term):
                nonlocal total
                total = term if total is None else add(total, term)

            if flags.use_reconstruction:
                xhats = [net.decode(m, z) for m, z in enumerate(zs)]
                term = reconstruction_loss(xs, xhats)
                _check_finite("reconstruction", term.item(), "contrastive", epoch)
                accumulate(term)
            if flags.use_high_level:
                hs = [net.high_level(z) for z in zs]
                term = feature_contrastive_total(hs, contrast.tau_feature)
                _check_finite("feature_contrastive", term.item(), "contrastive", epoch)
                accumulate(scale(term, contrast.lambda_feature))
            if flags.contrast_on_low:
                term = feature_contrastive_total(zs, contrast.tau_feature)
                _check_finite("low_contrastive", term.item(), "contrastive", epoch)
                accumulate(scale(term, contrast.lambda_feature))
            if flags.contrast_on_labels:
                qs = [net.soft_assign(z) for z in zs]
                term = label_consistency_loss(qs, contrast.tau_label)
                _check_finite("label_consistency", term.item(), "contrastive", epoch)
                accumulate(scale(term, contrast.lambda_label))

            opt.zero_grad()
            total.backward()
            opt.step()
        _record_epoch(net, ds, cfg, log, "contrastive", epoch)
    return net


def compute_matches(net: MultiViewNetwork, ds: MultiViewDataset,
                    rng: np.random.Generator) -> list[MatchResult]:
    """K-means each view's high-level features and align with the label head."""
    with no_grad():
        zs = [net.encode(m, ds.views[m]) for m in range(ds.n_views)]
        hs = [net.high_level(z).values for z in zs]
        qs = [net.soft_assign(z).values for z in zs]
    matches = []
    for m in range(ds.n_views):
        result = kmeans(hs[m], net.n_clusters, rng)
        matches.append(match_view(qs[m], result.labels, net.n_clusters))
    return matches


def pseudo_label_stage(net: MultiViewNetwork, ds: MultiViewDataset,
                       cfg: TrainConfig, log: TrainLog | None = None
                       ) -> tuple[MultiViewNetwork, list[MatchResult]]:
    """Match K-means clusters to label-head clusters, then fine-tune.

    Fine-tuning minimizes cross entropy against the matched one-hot
    targets and updates only the encoders and the label head; decoders
    and the feature head are untouched by construction.
    """
    if ds.n_clusters > ds.n_samples:
        raise ValueError(f"cannot form {ds.n_clusters} clusters from "
                         f"{ds.n_samples} samples")
    km_rng = spawn_rng(cfg.seed, 3)
    matches = compute_matches(net, ds, km_rng)
    params = []
    for m in range(net.n_views):
        params += net.encoder_params(m)
    params += net.label_head_params()
    opt = _stage_optimizer(params, cfg.learning_rate)
    rng = spawn_rng(cfg.seed, 4)
    batch = min(cfg.batch_size, ds.n_samples)
    targets = [match.matched_targets for match in matches]
    _record_epoch(net, ds, cfg, log, "finetune", 0, finetune_targets=targets)
    for epoch in range(1, cfg.finetune_epochs + 1):
        if (cfg.matching_refresh_every > 0 and epoch > 1
                and (epoch - 1) % cfg.matching_refresh_every == 0):
            matches = compute_matches(net, ds, km_rng)
            targets = [match.matched_targets for match in matches]
        for idx in minibatch_iter(ds, batch, rng):
            xs = _batch_tensors(ds.views, idx)
            zs = [net.encode(m, x) for m, x in enumerate(xs)]
            qs = [net.soft_assign(z) for z in zs]
            loss = finetune_cross_entropy([t[idx] for t in targets], qs)
            _check_finite("finetune_cross_entropy", loss.item(), "finetune", epoch)
            opt.zero_grad()
            loss.backward()
            opt.step()
        _record_epoch(net, ds, cfg, log, "finetune", epoch, finetune_targets=targets)
    return net, matches


def predict_assignments(net: MultiViewNetwork, views) -> list[np.ndarray]:
    """Soft cluster assignments per view (encoders + label head)."""
    with no_grad():
        return [net.soft_assign(net.encode(m, v)).values
                for m, v in enumerate(views)]


def predict_labels(net: MultiViewNetwork, views) -> np.ndarray:
    """Hard labels from the view-averaged soft assignments."""
    return final_labels(predict_assignments(net, views))


def high_level_features(net: MultiViewNetwork, views) -> list[np.ndarray]:
    """High-level features per view (encoders + feature head)."""
    with no_grad():
        return [net.high_level(net.encode(m, v)).values
                for m, v in enumerate(views)]


def run_pipeline(ds: MultiViewDataset, cfg: TrainConfig) -> PipelineResult:
    """Run all stages in order and predict final labels.

    Deterministic: the result is a pure function of the dataset and the
    config (including its seed).
    """
    cfg.validate()
    if ds.n_views < 2:
        raise ValueError(f"the pipeline needs at least 2 views, got {ds.n_views}")
    if ds.n_clusters > ds.n_samples:
        raise ValueError(f"cannot form {ds.n_clusters} clusters from "
                         f"{ds.n_samples} samples")
    flags = cfg.ablation
    net = MultiViewNetwork(ds.view_dims, ds.n_clusters, latent_dim=cfg.latent_dim,
                           high_dim=cfg.high_dim, encoder_widths=cfg.encoder_widths,
                           label_hidden=cfg.label_hidden, seed=cfg.seed)
    log = TrainLog()
    if flags.use_reconstruction:
        pretrain(net, ds, cfg, log)
    contrastive_train(net, ds, cfg, log)
    matches = None
    if flags.use_high_level:
        net, matches = pseudo_label_stage(net, ds, cfg, log)
    labels = predict_labels(net, ds.views)
    return PipelineResult(net, log, labels, matches)


def run_ablation(ds: MultiViewDataset, variant: str,
                 cfg: TrainConfig | None = None) -> dict:
    """Run one named ablation variant and score it against ground truth."""
    if variant not in ABLATION_VARIANTS:
        raise ValueError(f"unknown ablation variant {variant!r}; expected one of "
                         f"{sorted(ABLATION_VARIANTS)}")
    if ds.labels is None:
        raise ValueError("ablation runs need a dataset with ground-truth labels")
    base = cfg if cfg is not None else TrainConfig()
    run_cfg = replace(base, ablation=replace(ABLATION_VARIANTS[variant]))
    result = run_pipeline(ds, run_cfg)
    scores = evaluate(result.labels, ds.labels)
    return {"variant": variant, "seed": run_cfg.seed, **scores}
