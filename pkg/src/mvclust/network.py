"""Per-view autoencoders with shared feature and label heads.

Every view gets its own encoder/decoder stack; a single linear head
(projecting latent codes to the high-level feature space) and a single
softmax label head are shared by all views. Sharing is by object
identity, so an update through any view's gradient path is visible to
every other view.
"""

from __future__ import annotations

import io

import numpy as np

from .errors import DataFormatError, ShapeError
from .optim import ParamTensor
from .tensor import Tensor2D, add_bias, as_tensor, matmul, relu, softmax_rows

CHECKPOINT_MAGIC = "mvclust-checkpoint v1"


def spawn_rng(seed: int, *key: int) -> np.random.Generator:
    """Deterministic, platform-stable generator for (seed, purpose key)."""
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    return np.random.default_rng(np.random.SeedSequence([int(seed), *key]))


class Linear:
    """One affine layer; weights uniform in +/- 1/sqrt(fan_in), biases zero."""

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator, name: str):
        bound = 1.0 / np.sqrt(in_dim)
        self.weight = ParamTensor(rng.uniform(-bound, bound, (in_dim, out_dim)),
                                  name + ".weight")
        self.bias = ParamTensor(np.zeros((1, out_dim)), name + ".bias")

    def __call__(self, x: Tensor2D) -> Tensor2D:
        return add_bias(matmul(x, self.weight.value), self.bias.value)

    def params(self) -> list[ParamTensor]:
        return [self.weight, self.bias]


class Mlp:
    """Stack of affine layers with ReLU between them; final layer linear."""

    def __init__(self, dims: list[int], rng: np.random.Generator, name: str):
        self.layers = [Linear(dims[i], dims[i + 1], rng, f"{name}.layer{i}")
                       for i in range(len(dims) - 1)]

    def __call__(self, x: Tensor2D) -> Tensor2D:
        for i, layer in enumerate(self.layers):
            x = layer(x)
            if i < len(self.layers) - 1:
                x = relu(x)
        return x

    def params(self) -> list[ParamTensor]:
        return [p for layer in self.layers for p in layer.params()]


class ViewAutoencoder:
    """Encoder D_m -> widths -> L and mirrored decoder L -> reversed widths -> D_m."""

    def __init__(self, input_dim: int, latent_dim: int, widths: tuple[int, ...],
                 rng: np.random.Generator, name: str):
        self.input_dim = input_dim
        self.latent_dim = latent_dim
        self.encoder = Mlp([input_dim, *widths, latent_dim], rng, name + ".enc")
        self.decoder = Mlp([latent_dim, *reversed(widths), input_dim], rng, name + ".dec")


class MultiViewNetwork:
    """The full trainable model: M autoencoders plus the two shared heads."""

    def __init__(self, view_dims, n_clusters: int, latent_dim: int = 64,
                 high_dim: int = 32, encoder_widths=(256, 128), label_hidden=(),
                 seed: int = 0):
        view_dims = tuple(int(d) for d in view_dims)
        if not view_dims or any(d < 1 for d in view_dims):
            raise ValueError(f"view dimensions must all be >= 1, got {view_dims}")
        if n_clusters < 2:
            raise ValueError(f"n_clusters must be >= 2, got {n_clusters}")
        if latent_dim < 1 or high_dim < 1:
            raise ValueError(f"latent_dim and high_dim must be >= 1, "
                             f"got {latent_dim} and {high_dim}")
        self.view_dims = view_dims
        self.n_clusters = int(n_clusters)
        self.latent_dim = int(latent_dim)
        self.high_dim = int(high_dim)
        self.encoder_widths = tuple(int(w) for w in encoder_widths)
        self.label_hidden = tuple(int(w) for w in label_hidden)
        self.seed = int(seed)

        rng = spawn_rng(seed, 0)
        self.autoencoders = [
            ViewAutoencoder(d, latent_dim, self.encoder_widths, rng, f"view{m}")
            for m, d in enumerate(view_dims)
        ]
        # Exactly one linear layer, no activation.
        self.feature_head = Linear(latent_dim, high_dim, rng, "feature_head")
        self.label_head = Mlp([latent_dim, *self.label_hidden, n_clusters],
                              rng, "label_head")

    @property
    def n_views(self) -> int:
        return len(self.autoencoders)

    def encode(self, view: int, x) -> Tensor2D:
        x = as_tensor(x)
        if x.cols != self.view_dims[view]:
            raise ShapeError(f"encode: view {view} expects {self.view_dims[view]} "
                             f"columns, got {x.shape}")
        return self.autoencoders[view].encoder(x)

    def decode(self, view: int, z) -> Tensor2D:
        z = as_tensor(z)
        if z.cols != self.latent_dim:
            raise ShapeError(f"decode: expected {self.latent_dim} columns, got {z.shape}")
        return self.autoencoders[view].decoder(z)

    def high_level(self, z) -> Tensor2D:
        """Project latent codes to the shared high-level feature space."""
        z = as_tensor(z)
        if z.cols != self.latent_dim:
            raise ShapeError(f"high_level: expected {self.latent_dim} columns, got {z.shape}")
        return self.feature_head(z)

    def soft_assign(self, z) -> Tensor2D:
        """Per-row cluster probabilities from the shared label head."""
        z = as_tensor(z)
        if z.cols != self.latent_dim:
            raise ShapeError(f"soft_assign: expected {self.latent_dim} columns, got {z.shape}")
        return softmax_rows(self.label_head(z))

    # Parameter groups, in checkpoint declaration order.
    def encoder_params(self, view: int) -> list[ParamTensor]:
        return self.autoencoders[view].encoder.params()

    def decoder_params(self, view: int) -> list[ParamTensor]:
        return self.autoencoders[view].decoder.params()

    def feature_head_params(self) -> list[ParamTensor]:
        return self.feature_head.params()

    def label_head_params(self) -> list[ParamTensor]:
        return self.label_head.params()

    def all_params(self) -> list[ParamTensor]:
        params = []
        for m in range(self.n_views):
            params += self.encoder_params(m)
            params += self.decoder_params(m)
        params += self.feature_head_params()
        params += self.label_head_params()
        return params


def _format_ints(values) -> str:
    return " ".join(str(int(v)) for v in values)


def save_checkpoint(net: MultiViewNetwork, path) -> None:
    """Write the documented checkpoint container.

    Layout: a UTF-8 text header (newline-terminated lines) with the
    architecture, one ``tensor <name> <rows> <cols>`` line per parameter
    in declaration order, and a final ``data`` line; immediately after
    it, each tensor's entries as row-major little-endian float64 in the
    declared order.
    """
    params = net.all_params()
    header = io.StringIO()
    header.write(CHECKPOINT_MAGIC + "\n")
    header.write(f"views {net.n_views}\n")
    header.write(f"view_dims {_format_ints(net.view_dims)}\n")
    header.write(f"latent_dim {net.latent_dim}\n")
    header.write(f"high_dim {net.high_dim}\n")
    header.write(f"encoder_widths {_format_ints(net.encoder_widths)}".rstrip() + "\n")
    header.write(f"label_hidden {_format_ints(net.label_hidden)}".rstrip() + "\n")
    header.write(f"clusters {net.n_clusters}\n")
    for p in params:
        header.write(f"tensor {p.name} {p.value.rows} {p.value.cols}\n")
    header.write("data\n")
    with open(path, "wb") as fh:
        fh.write(header.getvalue().encode("utf-8"))
        for p in params:
            fh.write(np.ascontiguousarray(p.value.values, dtype="<f8").tobytes())


def load_checkpoint(path) -> MultiViewNetwork:
    """Rebuild a network from a checkpoint written by ``save_checkpoint``."""
    with open(path, "rb") as fh:
        blob = fh.read()
    end = blob.find(b"\ndata\n")
    if end < 0:
        raise DataFormatError(f"{path}: missing 'data' marker in checkpoint header")
    header_lines = blob[:end].decode("utf-8").split("\n")
    payload = blob[end + len(b"\ndata\n"):]
    if not header_lines or header_lines[0] != CHECKPOINT_MAGIC:
        raise DataFormatError(f"{path}: not a {CHECKPOINT_MAGIC!r} file")

    fields: dict[str, list[str]] = {}
    declared: list[tuple[str, int, int]] = []
    for line in header_lines[1:]:
        tokens = line.split()
        if not tokens:
            continue
        if tokens[0] == "tensor":
            if len(tokens) != 4:
                raise DataFormatError(f"{path}: malformed tensor line {line!r}")
            declared.append((tokens[1], int(tokens[2]), int(tokens[3])))
        else:
            fields[tokens[0]] = tokens[1:]
    try:
        net = MultiViewNetwork(
            view_dims=[int(v) for v in fields["view_dims"]],
            n_clusters=int(fields["clusters"][0]),
            latent_dim=int(fields["latent_dim"][0]),
            high_dim=int(fields["high_dim"][0]),
            encoder_widths=[int(v) for v in fields.get("encoder_widths", [])],
            label_hidden=[int(v) for v in fields.get("label_hidden", [])],
        )
    except (KeyError, IndexError, ValueError) as exc:
        raise DataFormatError(f"{path}: incomplete checkpoint header ({exc})") from exc

    params = net.all_params()
    if len(params) != len(declared):
        raise DataFormatError(f"{path}: header declares {len(declared)} tensors, "
                              f"architecture has {len(params)}")
    offset = 0
    for p, (name, rows, cols) in zip(params, declared):
        if p.name != name or p.value.shape != (rows, cols):
            raise DataFormatError(f"{path}: tensor {name} ({rows}x{cols}) does not match "
                                  f"expected {p.name} {p.value.shape}")
        nbytes = rows * cols * 8
        chunk = payload[offset:offset + nbytes]
        if len(chunk) != nbytes:
            raise DataFormatError(f"{path}: checkpoint payload truncated at {name}")
        p.value.values[...] = np.frombuffer(chunk, dtype="<f8").reshape(rows, cols)
        offset += nbytes
    if offset != len(payload):
        raise DataFormatError(f"{path}: {len(payload) - offset} trailing bytes in payload")
    return net
