"""Plain-text run configuration: one ``key=value`` per line.

Every generation and training hyperparameter lives in one flat
namespace; unknown keys are rejected. ``to_text`` emits the keys in a
canonical order such that parse -> echo -> parse is lossless. Blank
lines and ``#`` comments are accepted on input and never emitted.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from .data import SyntheticConfig
from .errors import ConfigError
from .losses import ContrastiveConfig
from .trainer import AblationFlags, TrainConfig

_INT_TUPLE_KEYS = {"view_dims", "encoder_widths", "label_hidden"}
_BOOL_KEYS = {"use_reconstruction", "use_high_level", "contrast_on_low",
              "contrast_on_labels"}


@dataclass
class RunConfig:
    """Union of the synthetic-data and training parameter spaces."""

    # dataset generation
    n_samples: int = 1000
    n_views: int = 2
    n_clusters: int = 4
    common_dim: int = 4
    private_dim: int = 8
    view_dims: tuple[int, ...] = (50, 50)
    private_strength: float = 2.0
    noise_sigma: float = 0.1
    # model
    latent_dim: int = 64
    high_dim: int = 32
    encoder_widths: tuple[int, ...] = (256, 128)
    label_hidden: tuple[int, ...] = ()
    # schedule
    pretrain_epochs: int = 100
    contrastive_epochs: int = 50
    finetune_epochs: int = 50
    batch_size: int = 256
    learning_rate: float = 1e-3
    matching_refresh_every: int = 0
    # contrastive objectives
    tau_feature: float = 0.5
    tau_label: float = 1.0
    lambda_feature: float = 1.0
    lambda_label: float = 1.0
    # objective switches
    use_reconstruction: bool = True
    use_high_level: bool = True
    contrast_on_low: bool = False
    contrast_on_labels: bool = True
    # shared
    seed: int = 0

    @classmethod
    def key_order(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    @classmethod
    def from_text(cls, text: str, source: str = "<config>") -> "RunConfig":
        cfg = cls()
        seen = set()
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{source}:{lineno}: expected key=value, got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key in seen:
                raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
            seen.add(key)
            cfg.set_key(key, value, where=f"{source}:{lineno}")
        return cfg

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        return cls.from_text(text, source=str(path))

    def set_key(self, key: str, value: str, where: str = "<override>") -> None:
        if key not in {f.name for f in fields(self)}:
            raise ConfigError(f"{where}: unknown key {key!r}")
        try:
            if key in _INT_TUPLE_KEYS:
                parsed = tuple(int(v) for v in value.split(",") if v.strip() != "")
            elif key in _BOOL_KEYS:
                lowered = value.lower()
                if lowered not in ("true", "false"):
                    raise ValueError(f"expected true or false, got {value!r}")
                parsed = lowered == "true"
            elif isinstance(getattr(self, key), bool):
                raise AssertionError  # all bools are listed in _BOOL_KEYS
            elif isinstance(getattr(self, key), int):
                parsed = int(value)
            else:
                parsed = float(value)
        except ValueError as exc:
            raise ConfigError(f"{where}: bad value for {key!r}: {exc}") from exc
        setattr(self, key, parsed)

    def apply_overrides(self, overrides) -> "RunConfig":
        """Apply ``key=value`` strings (e.g. trailing CLI arguments)."""
        for item in overrides:
            if "=" not in item:
                raise ConfigError(f"override {item!r} is not of the form key=value")
            key, value = item.split("=", 1)
            self.set_key(key.strip(), value.strip())
        return self

    def _format_value(self, key) -> str:
        value = getattr(self, key)
        if key in _INT_TUPLE_KEYS:
            return ",".join(str(int(v)) for v in value)
        if isinstance(value, bool):
            return "true" if value else "false"
        if isinstance(value, float):
            return repr(value)
        return str(value)

    def to_text(self) -> str:
        return "".join(f"{key}={self._format_value(key)}\n"
                       for key in self.key_order())

    def validate(self) -> "RunConfig":
        try:
            self.synthetic_config()
            self.train_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return self

    def synthetic_config(self) -> SyntheticConfig:
        return SyntheticConfig(
            n_samples=self.n_samples, n_views=self.n_views,
            n_clusters=self.n_clusters, common_dim=self.common_dim,
            private_dim=self.private_dim, view_dims=tuple(self.view_dims),
            private_strength=self.private_strength, noise_sigma=self.noise_sigma,
            seed=self.seed,
        ).validate()

    def train_config(self) -> TrainConfig:
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
            seed=self.seed,
        ).validate()
