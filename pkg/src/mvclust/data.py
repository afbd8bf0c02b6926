"""Multi-view datasets: synthetic generation, directory I/O, batching.

A dataset directory holds ``manifest.txt`` (key=value lines: views,
samples, clusters, dim_0..dim_{M-1}), one ``view_<m>.csv`` per view
(comma-separated, one sample per row, full round-trip precision), and an
optional ``labels.csv`` (one integer per line). The same format serves
as the loader for external real datasets.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import DataFormatError
from .network import spawn_rng

# Generator internals: cluster centers are standard-normal draws in the
# common space scaled by CENTER_SCALE; samples jitter around them with
# JITTER_SIGMA. The mixing net squashes with tanh at gain MIX_GAIN.
CENTER_SCALE = 3.0
JITTER_SIGMA = 0.15
MIX_GAIN = 0.5


@dataclass
class MultiViewDataset:
    """M row-aligned feature matrices with optional ground-truth labels."""

    views: list[np.ndarray]
    labels: np.ndarray | None
    n_clusters: int

    def __post_init__(self):
        if not self.views:
            raise ValueError("MultiViewDataset: need at least one view")
        n = self.views[0].shape[0]
        for m, v in enumerate(self.views):
            if v.ndim != 2:
                raise ValueError(f"view {m} is not a matrix, shape {v.shape}")
            if v.shape[0] != n:
                raise DataFormatError(f"view 0 has {n} rows but view {m} has "
                                      f"{v.shape[0]} rows")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64).ravel()
            if self.labels.shape[0] != n:
                raise DataFormatError(f"views have {n} rows but labels has "
                                      f"{self.labels.shape[0]} entries")
            if self.labels.size and (self.labels.min() < 0
                                     or self.labels.max() >= self.n_clusters):
                raise ValueError(f"labels outside [0, {self.n_clusters})")

    @property
    def n_samples(self) -> int:
        return self.views[0].shape[0]

    @property
    def n_views(self) -> int:
        return len(self.views)

    @property
    def view_dims(self) -> tuple[int, ...]:
        return tuple(v.shape[1] for v in self.views)


@dataclass
class SyntheticConfig:
    """Knobs for the synthetic benchmark generator.

    Cluster identity lives in a low-dimensional common code shared by
    all views; each view adds its own private code (scaled by
    ``private_strength``) that carries no cluster information, then maps
    the concatenation through a fixed random two-layer tanh mixer.
    """

    n_samples: int = 1000
    n_views: int = 2
    n_clusters: int = 4
    common_dim: int = 4
    private_dim: int = 8
    view_dims: tuple[int, ...] = (50, 50)
    private_strength: float = 2.0
    noise_sigma: float = 0.1
    seed: int = 0

    def validate(self) -> "SyntheticConfig":
        self.view_dims = tuple(int(d) for d in self.view_dims)
        if self.n_clusters < 2:
            raise ValueError(f"n_clusters must be >= 2, got {self.n_clusters}")
        if self.n_samples < self.n_clusters:
            raise ValueError(f"need n_samples >= n_clusters, got "
                             f"{self.n_samples} < {self.n_clusters}")
        if self.n_views < 1:
            raise ValueError(f"n_views must be >= 1, got {self.n_views}")
        if len(self.view_dims) != self.n_views:
            raise ValueError(f"view_dims has {len(self.view_dims)} entries "
                             f"for {self.n_views} views")
        if any(d < 1 for d in self.view_dims):
            raise ValueError(f"view dimensions must be >= 1, got {self.view_dims}")
        if self.common_dim < 1 or self.private_dim < 0:
            raise ValueError("common_dim must be >= 1 and private_dim >= 0")
        if self.private_strength < 0 or self.noise_sigma < 0:
            raise ValueError("private_strength and noise_sigma must be >= 0")
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")
        return self


def generate_synthetic(cfg: SyntheticConfig) -> MultiViewDataset:
    """Draw a dataset per the config; identical seeds give identical bytes.

    Labels are a seeded shuffle of a balanced assignment, so every
    cluster is populated (and n_samples == n_clusters yields a
    permutation of 0..K-1). Draw order is fixed so that changing
    ``private_strength`` or ``noise_sigma`` rescales those components
    without touching labels or any other draw.
    """
    cfg.validate()
    rng = spawn_rng(cfg.seed, 7)
    n, k = cfg.n_samples, cfg.n_clusters
    labels = rng.permutation(np.arange(n) % k)
    centers = rng.normal(size=(k, cfg.common_dim)) * CENTER_SCALE
    common = centers[labels] + rng.normal(size=(n, cfg.common_dim)) * JITTER_SIGMA

    views = []
    code_dim = cfg.common_dim + cfg.private_dim
    hidden_dim = max(16, 2 * code_dim)
    for dim in cfg.view_dims:
        mix_in = rng.normal(size=(code_dim, hidden_dim)) * (MIX_GAIN / np.sqrt(code_dim))
        mix_out = rng.normal(size=(hidden_dim, dim)) / np.sqrt(hidden_dim)
        private = rng.normal(size=(n, cfg.private_dim)) * cfg.private_strength
        code = np.hstack([common, private])
        x = np.tanh(code @ mix_in) @ mix_out
        x += rng.normal(size=(n, dim)) * cfg.noise_sigma
        views.append(x)
    return MultiViewDataset(views, labels, k)


def _format_row(row: np.ndarray) -> str:
    return ",".join(repr(float(v)) for v in row)


def save_dataset(ds: MultiViewDataset, dir_path) -> None:
    """Write the dataset directory format (see module docstring)."""
    os.makedirs(dir_path, exist_ok=True)
    lines = [f"views={ds.n_views}", f"samples={ds.n_samples}",
             f"clusters={ds.n_clusters}"]
    lines += [f"dim_{m}={d}" for m, d in enumerate(ds.view_dims)]
    with open(os.path.join(dir_path, "manifest.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    for m, view in enumerate(ds.views):
        with open(os.path.join(dir_path, f"view_{m}.csv"), "w") as fh:
            for row in view:
                fh.write(_format_row(row) + "\n")
    if ds.labels is not None:
        with open(os.path.join(dir_path, "labels.csv"), "w") as fh:
            for value in ds.labels:
                fh.write(f"{int(value)}\n")


def _parse_manifest(path) -> dict[str, int]:
    entries = {}
    try:
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                if "=" not in line:
                    raise DataFormatError(f"{path}:{lineno}: expected key=value, "
                                          f"got {line!r}")
                key, value = line.split("=", 1)
                try:
                    entries[key.strip()] = int(value)
                except ValueError as exc:
                    raise DataFormatError(f"{path}:{lineno}: non-integer value "
                                          f"{value!r} for {key!r}") from exc
    except FileNotFoundError as exc:
        raise DataFormatError(f"{path}: manifest not found") from exc
    return entries


def _load_view(path, expected_dim: int) -> np.ndarray:
    rows = []
    try:
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                parts = line.split(",")
                if len(parts) != expected_dim:
                    raise DataFormatError(f"{path}:{lineno}: expected {expected_dim} "
                                          f"values, got {len(parts)}")
                try:
                    rows.append([float(p) for p in parts])
                except ValueError as exc:
                    raise DataFormatError(f"{path}:{lineno}: malformed number "
                                          f"({exc})") from exc
    except FileNotFoundError as exc:
        raise DataFormatError(f"{path}: view file not found") from exc
    return np.asarray(rows, dtype=np.float64).reshape(len(rows), expected_dim)


def load_dataset(dir_path) -> MultiViewDataset:
    """Read a dataset directory; labels.csv is optional."""
    manifest = _parse_manifest(os.path.join(dir_path, "manifest.txt"))
    for key in ("views", "samples", "clusters"):
        if key not in manifest:
            raise DataFormatError(f"{dir_path}: manifest is missing {key!r}")
    n_views = manifest["views"]
    views = []
    for m in range(n_views):
        dim_key = f"dim_{m}"
        if dim_key not in manifest:
            raise DataFormatError(f"{dir_path}: manifest is missing {dim_key!r}")
        view = _load_view(os.path.join(dir_path, f"view_{m}.csv"), manifest[dim_key])
        if view.shape[0] != manifest["samples"]:
            raise DataFormatError(f"{dir_path}: manifest declares "
                                  f"{manifest['samples']} samples but view_{m}.csv "
                                  f"has {view.shape[0]} rows")
        views.append(view)

    labels = None
    labels_path = os.path.join(dir_path, "labels.csv")
    if os.path.exists(labels_path):
        with open(labels_path) as fh:
            raw = [line.strip() for line in fh if line.strip()]
        try:
            labels = np.asarray([int(v) for v in raw], dtype=np.int64)
        except ValueError as exc:
            raise DataFormatError(f"{labels_path}: malformed label ({exc})") from exc
    return MultiViewDataset(views, labels, manifest["clusters"])


def minibatch_iter(data, batch_size: int, rng: np.random.Generator):
    """One epoch of aligned batches: a seeded shuffle cut into chunks.

    ``data`` is a dataset or a plain sample count. Each yielded index
    array selects the same rows from every view; the final short batch
    is kept, and the union over an epoch covers every index exactly
    once.
    """
    n_samples = data.n_samples if isinstance(data, MultiViewDataset) else int(data)
    if not 1 <= batch_size <= n_samples:
        raise ValueError(f"minibatch_iter: need 1 <= batch_size <= {n_samples}, "
                         f"got {batch_size}")
    order = rng.permutation(n_samples)
    for start in range(0, n_samples, batch_size):
        yield order[start:start + batch_size]
