"""Typed run configuration, loaded from TOML or JSON files and overridden from the command line.

Values resolve as: command-line flag, then configuration file, then the defaults declared here.
The resolved configuration is written into every run manifest.
"""

from __future__ import annotations

import copy
import json
import logging
import pathlib
import sys
import typing as t

import attr

from dcsc.assignment.sinkhorn import DEFAULT_EPSILON, DEFAULT_ITERATIONS
from dcsc.data.split import SplitSpec
from dcsc.encoder import EncoderConfig
from dcsc.errors import ConfigError, DCSCError
from dcsc.losses import DEFAULT_TAU
from dcsc.synth import PRESETS

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = (
    "SinkhornConfig",
    "TrainConfig",
    "DataConfig",
    "RunConfig",
    "SweepConfig",
    "load_mapping",
    "apply_overrides",
    "SYNTH_LEARNING_RATE",
)

logger = logging.getLogger(__name__)

SYNTH_LEARNING_RATE: t.Final[float] = 1e-3
"""Learning rate used for synthetic corpora unless one is configured explicitly."""


def _positive(instance: t.Any, attribute: attr.Attribute[t.Any], value: float) -> None:
    if not value > 0:
        raise ConfigError(f"'{attribute.name}' must be positive, got {value}.")


def _non_negative(instance: t.Any, attribute: attr.Attribute[t.Any], value: float) -> None:
    if value < 0:
        raise ConfigError(f"'{attribute.name}' must not be negative, got {value}.")


def _batch_size(instance: t.Any, attribute: attr.Attribute[int], value: int) -> None:
    if value < 2:
        raise ConfigError(f"'{attribute.name}' must be at least 2 for the contrastive terms, got {value}.")


@attr.frozen(slots=True)
class SinkhornConfig:
    """Settings of the in-training Sinkhorn-Knopp assignment."""

    epsilon: float = attr.field(default=DEFAULT_EPSILON, converter=float, validator=_positive)
    iterations: int = attr.field(default=DEFAULT_ITERATIONS, validator=_positive)


@attr.frozen(slots=True)
class TrainConfig:
    """Hyperparameters of both training stages.

    Parameters
    ----------
    warmup_epochs : int
        Epochs of the warm-up stage.
    cluster_epochs : int
        Epochs of the clustering stage.
    learning_rate : float
        AdamW learning rate.
    weight_decay : float
        AdamW decoupled weight decay.
    betas : tuple[float, float]
        AdamW moment coefficients.
    adam_eps : float
        AdamW denominator epsilon.
    supervised_batch_size : int
        Batch size of supervised steps.
    unsupervised_batch_size : int
        Batch size of unsupervised warm-up steps.
    cluster_batch_size : int
        Batch size of clustering steps.
    tau : float
        Temperature of all contrastive terms.
    sinkhorn : SinkhornConfig
        Sinkhorn-Knopp settings.
    seed : int
        Root seed of the run.
    ablation_no_sup_cluster : bool
        Skip supervised steps during the clustering stage.
    kmeans_max_iters : int
        Lloyd iteration limit of every K-Means++ run.
    kmeans_n_init : int
        Independently seeded K-Means++ runs; the lowest inertia wins.
    """

    warmup_epochs: int = attr.field(default=100, validator=_non_negative)
    cluster_epochs: int = attr.field(default=100, validator=_non_negative)
    learning_rate: float = attr.field(default=5e-5, converter=float, validator=_positive)
    weight_decay: float = attr.field(default=0.01, converter=float, validator=_non_negative)
    betas: tuple[float, float] = attr.field(default=(0.9, 0.999), converter=tuple)
    adam_eps: float = attr.field(default=1e-8, converter=float, validator=_positive)
    supervised_batch_size: int = attr.field(default=128, validator=_batch_size)
    unsupervised_batch_size: int = attr.field(default=128, validator=_batch_size)
    cluster_batch_size: int = attr.field(default=512, validator=_batch_size)
    tau: float = attr.field(default=DEFAULT_TAU, converter=float, validator=_positive)
    sinkhorn: SinkhornConfig = attr.field(
        factory=SinkhornConfig,
        converter=lambda v: v if isinstance(v, SinkhornConfig) else _build(SinkhornConfig, v, "train.sinkhorn"),
    )
    seed: int = attr.field(default=0, validator=_non_negative)
    ablation_no_sup_cluster: bool = False
    kmeans_max_iters: int = attr.field(default=300, validator=_positive)
    kmeans_n_init: int = attr.field(default=10, validator=_positive)

    @betas.validator
    def _check_betas(self, attribute: attr.Attribute[tuple[float, float]], value: tuple[float, float]) -> None:
        if len(value) != 2 or not all(0.0 <= b < 1.0 for b in value):
            raise ConfigError(f"'betas' must be two values in [0, 1), got {value}.")


@attr.frozen(slots=True)
class DataConfig:
    """Where the corpora come from: files on disk or a synthetic preset.

    Parameters
    ----------
    train : str | None
        Training corpus path.
    validation : str | None
        Optional validation corpus path.
    test : str | None
        Test corpus path.
    synth : str | None
        Name of a synthetic preset, used instead of files.
    synth_seed : int | None
        Seed of the synthetic corpus; the preset's own seed when omitted. The run seed never changes
        the corpus, only the split and the training.
    num_intents : int | None
        Total intent count `G` of file corpora; inferred from the largest label when omitted.
    """

    train: str | None = None
    validation: str | None = None
    test: str | None = None
    synth: str | None = None
    synth_seed: int | None = attr.field(default=None, validator=attr.validators.optional(_non_negative))
    num_intents: int | None = None

    def __attrs_post_init__(self) -> None:
        if self.synth_seed is not None and self.synth is None:
            raise ConfigError("'synth_seed' only applies to a synthetic preset.")
        if self.synth is not None:
            if self.synth not in PRESETS:
                raise ConfigError(f"Unknown synthetic preset '{self.synth}', expected one of {sorted(PRESETS)}.")
            if self.train is not None or self.test is not None:
                raise ConfigError("Configure either a synthetic preset or corpus files, not both.")
        elif self.train is None or self.test is None:
            raise ConfigError("Corpus files need both a 'train' and a 'test' path.")

    @property
    def is_synthetic(self) -> bool:
        return self.synth is not None


def _default_data() -> DataConfig:
    return DataConfig(synth="default")


_ENCODER_KEYS: t.Final[frozenset[str]] = frozenset(
    {"hidden_dims", "output_dim", "dropout", "activation", "head_activation", "normalize_output"}
)


def _encoder_options(value: t.Mapping[str, t.Any]) -> dict[str, t.Any]:
    options = dict(value)
    if unknown := set(options) - _ENCODER_KEYS:
        raise ConfigError(f"Unknown encoder settings: {sorted(unknown)}.")
    # Validate eagerly with a placeholder input dimension.
    EncoderConfig(input_dim=1, **options)
    return options


@attr.frozen(slots=True)
class RunConfig:
    """Everything a single run needs."""

    data: DataConfig = attr.field(factory=_default_data)
    split: SplitSpec = attr.field(factory=SplitSpec)
    encoder: dict[str, t.Any] = attr.field(factory=dict, converter=_encoder_options)
    """Encoder settings except the input dimension, which comes from the data."""
    train: TrainConfig = attr.field(factory=TrainConfig)
    out: str = "runs/dcsc"

    def encoder_config(self, input_dim: int) -> EncoderConfig:
        return EncoderConfig(input_dim=input_dim, **self.encoder)

    @classmethod
    def from_mapping(cls, data: t.Mapping[str, t.Any]) -> RunConfig:
        """Build a run configuration from a parsed file, possibly with overrides applied.

        Raises
        ------
        ConfigError
            If a section is unknown or a value is invalid.
        """
        known = {"data", "split", "encoder", "train", "sinkhorn", "sweep", "out"}
        if unknown := set(data) - known:
            raise ConfigError(f"Unknown configuration sections: {sorted(unknown)}.")

        data_config = _build(DataConfig, data["data"], "data") if "data" in data else _default_data()

        train_section = dict(data.get("train", {}))
        if "sinkhorn" in data:
            train_section["sinkhorn"] = {**train_section.get("sinkhorn", {}), **data["sinkhorn"]}
        if data_config.is_synthetic:
            train_section.setdefault("learning_rate", SYNTH_LEARNING_RATE)

        return cls(
            data=data_config,
            split=_build(SplitSpec, data.get("split", {}), "split"),
            encoder=data.get("encoder", {}),
            train=_build(TrainConfig, train_section, "train"),
            out=str(data.get("out", "runs/dcsc")),
        )

    def to_dict(self) -> dict[str, t.Any]:
        """The resolved configuration, JSON serializable."""
        return attr.asdict(self, retain_collection_types=False)


@attr.frozen(slots=True)
class SweepConfig:
    """A grid of runs over known-intent fractions and seeds."""

    known_fractions: tuple[float, ...] = attr.field(default=(0.25, 0.5, 0.75), converter=tuple)
    seeds: tuple[int, ...] = attr.field(default=(0, 1, 2), converter=tuple)
    ablation: bool = False
    """Also run every cell without supervised steps in the clustering stage."""
    workers: int | None = None
    """Worker processes; `None` means `DCSC_THREADS` or one."""

    @known_fractions.validator
    def _check_fractions(self, attribute: attr.Attribute[tuple[float, ...]], value: tuple[float, ...]) -> None:
        if not value:
            raise ConfigError("A sweep needs at least one known fraction.")
        if any(not 0.0 < f <= 1.0 for f in value):
            raise ConfigError(f"Known fractions must lie in (0, 1], got {value}.")

    @seeds.validator
    def _check_seeds(self, attribute: attr.Attribute[tuple[int, ...]], value: tuple[int, ...]) -> None:
        if not value:
            raise ConfigError("A sweep needs at least one seed.")

    @classmethod
    def from_mapping(cls, data: t.Mapping[str, t.Any]) -> SweepConfig:
        return _build(cls, data.get("sweep", {}), "sweep")


_T = t.TypeVar("_T")


def _build(cls: type[_T], section: t.Any, name: str) -> _T:
    if not isinstance(section, t.Mapping):
        raise ConfigError(f"Section '{name}' must be a table, got {type(section).__name__}.")

    fields = {field.alias for field in attr.fields(t.cast("type[t.Any]", cls))}
    if unknown := set(section) - fields:
        raise ConfigError(f"Unknown settings in '{name}': {sorted(unknown)}.")
    try:
        return cls(**section)
    except DCSCError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"Invalid value in '{name}': {exc}") from exc


def load_mapping(path: str | pathlib.Path) -> dict[str, t.Any]:
    """Parse a TOML or JSON configuration file, chosen by extension.

    Raises
    ------
    ConfigError
        If the file cannot be read or parsed.
    """
    path = pathlib.Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"Cannot read configuration file '{path}': {exc}") from exc

    try:
        if path.suffix == ".toml":
            mapping = tomllib.loads(text)
        elif path.suffix == ".json":
            mapping = json.loads(text)
        else:
            raise ConfigError(f"Unsupported configuration format '{path.suffix}', expected .toml or .json.")
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"Cannot parse configuration file '{path}': {exc}") from exc

    if not isinstance(mapping, dict):
        raise ConfigError(f"Configuration file '{path}' must contain a table at the top level.")
    logger.debug(f"Loaded configuration from {path}.")
    return t.cast("dict[str, t.Any]", mapping)


def apply_overrides(mapping: t.Mapping[str, t.Any], overrides: t.Mapping[str, t.Any]) -> dict[str, t.Any]:
    """Return a copy of `mapping` with dotted keys such as `split.known_fraction` replaced.

    Overrides whose value is `None` were not given and are skipped.
    """
    result = copy.deepcopy(dict(mapping))
    for dotted, value in overrides.items():
        if value is None:
            continue
        *path, key = dotted.split(".")
        section = result
        for part in path:
            section = section.setdefault(part, {})
        section[key] = value

    # A synthetic preset given on the command line replaces corpus files from the file.
    if overrides.get("data.synth") is not None:
        result["data"] = {"synth": overrides["data.synth"]}
    return result

# MIT License
#
# Copyright (c) 2024-present dcsc contributors
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to deal
# in the Software without restriction, including without limitation the rights
# to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
# copies of the Software, and to permit persons to whom the Software is
# furnished to do so, subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included in all
# copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
# SOFTWARE.
