from __future__ import annotations

import itertools
import logging
import math
import typing as t

import attr
import numpy as np
import torch
import torch.nn.functional as F
from sklearn.preprocessing import StandardScaler  # pyright: ignore[reportMissingTypeStubs]
from torch import nn

from dcsc.errors import ConfigError, MalformedSampleError, MissingCacheError, NumericOverflowError, ShapeMismatchError

if t.TYPE_CHECKING:
    from dcsc.data.corpus import Sample
    from dcsc.internal.types import Activation, FloatArray

__all__ = (
    "EncoderConfig",
    "Encoder",
    "ViewPair",
    "mean_pool",
    "pool_batch",
    "forward_two_views",
    "backward",
    "encode",
)

logger = logging.getLogger(__name__)

DTYPE: t.Final[torch.dtype] = torch.float64

_BATCH_IDS = itertools.count()

_ACTIVATIONS: dict[str, t.Callable[[torch.Tensor], torch.Tensor]] = {
    "tanh": torch.tanh,
    "relu": torch.relu,
    "identity": lambda x: x,
}


def _check_activation(instance: t.Any, attribute: attr.Attribute[str], value: str) -> None:
    if value not in _ACTIVATIONS:
        raise ConfigError(f"'{attribute.name}' must be one of {sorted(_ACTIVATIONS)}, got {value!r}.")


def _check_dropout(instance: EncoderConfig, attribute: attr.Attribute[float], value: float) -> None:
    if not 0.0 <= value < 1.0:
        raise ConfigError(f"'dropout' must lie in [0, 1), got {value}.")


def _check_positive(instance: t.Any, attribute: attr.Attribute[int], value: int) -> None:
    if value < 1:
        raise ConfigError(f"'{attribute.name}' must be positive, got {value}.")


@attr.frozen(slots=True)
class EncoderConfig:
    """Shape and behaviour of the trainable encoder.

    Parameters
    ----------
    input_dim : int
        Feature dimension `D_in` of the (pooled) input.
    hidden_dims : tuple[int, ...]
        Widths of the hidden layers. Empty for a single dense layer.
    output_dim : int
        Representation dimension `D`.
    dropout : float
        Dropout rate applied to the input of every dense layer, in `[0, 1)`.
    activation : Activation
        Nonlinearity of the hidden layers.
    head_activation : Activation
        Nonlinearity of the final dense representation head.
    normalize_output : bool
        Whether representations are L2-normalized as the final step.
    """

    input_dim: int = attr.field(validator=_check_positive)
    hidden_dims: tuple[int, ...] = attr.field(default=(64,), converter=tuple)
    output_dim: int = attr.field(default=32, validator=_check_positive)
    dropout: float = attr.field(default=0.1, converter=float, validator=_check_dropout)
    activation: Activation = attr.field(default="tanh", validator=_check_activation)
    head_activation: Activation = attr.field(default="identity", validator=_check_activation)
    normalize_output: bool = True

    @hidden_dims.validator
    def _check_hidden_dims(self, attribute: attr.Attribute[tuple[int, ...]], value: tuple[int, ...]) -> None:
        if any(width < 1 for width in value):
            raise ConfigError(f"Hidden layer widths must be positive, got {value}.")


class Encoder(nn.Module):
    """A small feed-forward encoder with a dense representation head.

    Dropout masks are drawn from explicit generators rather than the global torch RNG, so two
    forward passes over the same batch can be given independent (or deliberately identical) masks.

    Parameters
    ----------
    config : EncoderConfig
        The encoder configuration.
    generator : torch.Generator | None
        Generator for weight initialization.
    """

    input_shift: torch.Tensor
    """Per-feature offset subtracted from every input, see [`fit_input`][dcsc.encoder.Encoder.fit_input]."""

    input_scale: torch.Tensor
    """Per-feature divisor applied after the offset."""

    def __init__(self, config: EncoderConfig, *, generator: torch.Generator | None = None) -> None:
        super().__init__()
        self.config = config
        self.register_buffer("input_shift", torch.zeros(config.input_dim, dtype=DTYPE))
        self.register_buffer("input_scale", torch.ones(config.input_dim, dtype=DTYPE))
        widths = [config.input_dim, *config.hidden_dims, config.output_dim]
        self.layers = nn.ModuleList(
            nn.Linear(fan_in, fan_out, dtype=DTYPE) for fan_in, fan_out in zip(widths[:-1], widths[1:])
        )
        self.reset_parameters(generator)

    @torch.no_grad()
    def reset_parameters(self, generator: torch.Generator | None = None) -> None:
        """Glorot-uniform weights and zero biases."""
        for layer in t.cast("t.Iterable[nn.Linear]", self.layers):
            bound = math.sqrt(6.0 / (layer.in_features + layer.out_features))
            layer.weight.copy_((torch.rand(layer.weight.shape, generator=generator, dtype=DTYPE) * 2 - 1) * bound)
            layer.bias.zero_()

    @torch.no_grad()
    def fit_input(self, features: FloatArray) -> None:
        """Standardize inputs with the per-feature mean and standard deviation of `features`.

        Constant features keep a unit divisor. The statistics are buffers, so checkpoints carry them.

        Raises
        ------
        ShapeMismatchError
            If `features` is not an `M x D_in` matrix with at least one row.
        """
        if features.ndim != 2 or features.shape[0] == 0 or features.shape[1] != self.config.input_dim:
            raise ShapeMismatchError((-1, self.config.input_dim), tuple(features.shape))

        scaler: t.Any = StandardScaler().fit(features)  # pyright: ignore[reportUnknownMemberType]
        self.input_shift.copy_(torch.from_numpy(np.asarray(scaler.mean_, dtype=np.float64)))
        self.input_scale.copy_(torch.from_numpy(np.asarray(scaler.scale_, dtype=np.float64)))
        logger.debug(f"Fitted input standardization on {features.shape[0]} sample(s).")

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    def _activation(self, index: int) -> t.Callable[[torch.Tensor], torch.Tensor]:
        is_head = index == self.num_layers - 1
        return _ACTIVATIONS[self.config.head_activation if is_head else self.config.activation]

    def draw_masks(self, batch_size: int, generator: torch.Generator) -> list[torch.Tensor]:
        """Draw one inverted-dropout mask per dense layer, already scaled by `1 / (1 - p)`."""
        p = self.config.dropout
        masks: list[torch.Tensor] = []
        for layer in t.cast("t.Iterable[nn.Linear]", self.layers):
            shape = (batch_size, layer.in_features)
            keep = torch.rand(shape, generator=generator, dtype=DTYPE) >= p
            masks.append(keep.to(DTYPE) / (1.0 - p))
        return masks

    def forward(self, x: torch.Tensor, masks: t.Sequence[torch.Tensor] | None = None) -> torch.Tensor:
        """Encode a pooled `N x D_in` batch.

        Parameters
        ----------
        x : torch.Tensor
            The pooled input batch.
        masks : t.Sequence[torch.Tensor] | None
            Dropout masks from [`draw_masks`][dcsc.encoder.Encoder.draw_masks]. `None` disables dropout.

        Raises
        ------
        NumericOverflowError
            If any layer produces a non-finite activation.
        """
        if x.ndim != 2 or x.shape[1] != self.config.input_dim:
            raise ShapeMismatchError((-1, self.config.input_dim), tuple(x.shape))

        h = (x - self.input_shift) / self.input_scale
        for index, layer in enumerate(self.layers):
            if masks is not None:
                h = h * masks[index]
            h = self._activation(index)(layer(h))
            if not torch.isfinite(h).all():
                raise NumericOverflowError(f"layers.{index}", f"Layer {index} produced a non-finite activation.")

        if self.config.normalize_output:
            h = F.normalize(h, p=2.0, dim=1)
        return h


@attr.frozen(slots=True, eq=False)
class ViewPair:
    """Two encodings of the same batch, produced with independently drawn dropout masks.

    Row `i` of `z` and row `i` of `z_prime` always encode the same sample.
    """

    z: torch.Tensor
    """First view, `N x D`."""

    z_prime: torch.Tensor
    """Second view, `N x D`."""

    dropout_mask_seeds: tuple[int, int]
    """Seeds of the two mask generators."""

    masks: tuple[tuple[torch.Tensor, ...], tuple[torch.Tensor, ...]] = ((), ())
    """The dropout masks of both passes, kept so the backward pass is exact."""

    batch_id: int = attr.field(factory=lambda: next(_BATCH_IDS))
    """Identifies the batch, so loss terms from different batches are never composed."""

    @property
    def batch_size(self) -> int:
        return int(self.z.shape[0])

    @property
    def stacked(self) -> torch.Tensor:
        """Both views stacked into a `2N x D` matrix (rows `0..N` are `z`, rows `N..2N` are `z_prime`)."""
        return torch.cat([self.z, self.z_prime], dim=0)

    @property
    def has_graph(self) -> bool:
        """Whether the views still carry the autograd graph of the forward pass."""
        return self.z.grad_fn is not None and self.z_prime.grad_fn is not None


def mean_pool(token_features: FloatArray | t.Sequence[t.Sequence[float]]) -> FloatArray:
    """Average a token-feature sequence into one instance vector.

    A 1-D input is already an instance vector and is returned unchanged.

    Raises
    ------
    MalformedSampleError
        If the sequence is empty.
    """
    features = np.asarray(token_features, dtype=np.float64)
    if features.ndim == 1:
        if features.size == 0:
            raise MalformedSampleError("Cannot pool an empty feature vector.")
        return features
    if features.ndim != 2 or features.shape[0] == 0:
        raise MalformedSampleError("Cannot pool an empty token sequence.")
    return features.mean(axis=0)


def pool_batch(samples: t.Sequence[Sample]) -> torch.Tensor:
    """Mean-pool every sample and stack them into an `N x D_in` tensor."""
    if not samples:
        raise MalformedSampleError("Cannot pool an empty batch.")
    return torch.from_numpy(np.stack([mean_pool(s.features) for s in samples])).to(DTYPE)


def _draw_seed(generator: torch.Generator) -> int:
    return int(torch.randint(0, 2**62, (1,), generator=generator).item())


def forward_two_views(
    encoder: Encoder,
    batch: torch.Tensor,
    generator: torch.Generator | None = None,
    *,
    seeds: tuple[int, int] | None = None,
) -> ViewPair:
    """Run the encoder twice over a batch with independently drawn dropout masks.

    Parameters
    ----------
    encoder : Encoder
        The encoder.
    batch : torch.Tensor
        The pooled `N x D_in` batch.
    generator : torch.Generator | None
        Generator the two mask seeds are drawn from. Required unless `seeds` is given.
    seeds : tuple[int, int] | None
        Explicit mask seeds. Passing the same seed twice yields identical views.

    Returns
    -------
    ViewPair
        The two views together with their masks.
    """
    if seeds is None:
        if generator is None:
            raise ConfigError("Either a generator or explicit mask seeds are required.")
        seeds = (_draw_seed(generator), _draw_seed(generator))

    if encoder.config.dropout > 0.0:
        masks_a = tuple(encoder.draw_masks(batch.shape[0], torch.Generator().manual_seed(seeds[0])))
        masks_b = tuple(encoder.draw_masks(batch.shape[0], torch.Generator().manual_seed(seeds[1])))
        z, z_prime = encoder(batch, masks_a), encoder(batch, masks_b)
    else:
        masks_a = masks_b = ()
        z = encoder(batch)
        z_prime = encoder(batch)

    return ViewPair(z=z, z_prime=z_prime, dropout_mask_seeds=seeds, masks=(masks_a, masks_b))


def backward(
    encoder: Encoder, views: ViewPair, grad_z: torch.Tensor, grad_z_prime: torch.Tensor
) -> dict[str, torch.Tensor]:
    """Back-propagate upstream gradients of both views into the encoder parameters.

    Parameters
    ----------
    encoder : Encoder
        The encoder that produced `views`.
    views : ViewPair
        Views produced by [`forward_two_views`][dcsc.encoder.forward_two_views] with autograd enabled.
    grad_z : torch.Tensor
        Upstream gradient `dL/dZ`.
    grad_z_prime : torch.Tensor
        Upstream gradient `dL/dZ'`.

    Returns
    -------
    dict[str, torch.Tensor]
        Gradient of every named encoder parameter. Includes the normalization Jacobian when enabled.

    Raises
    ------
    MissingCacheError
        If the views were produced without recording the forward pass.
    """
    if not views.has_graph:
        raise MissingCacheError("These views carry no recorded forward pass; run forward_two_views with grad enabled.")

    names, params = zip(*encoder.named_parameters())
    grads = torch.autograd.grad(
        outputs=(views.z, views.z_prime),
        inputs=params,
        grad_outputs=(grad_z, grad_z_prime),
        retain_graph=True,
        allow_unused=True,
    )
    return {
        name: torch.zeros_like(param) if grad is None else grad for name, param, grad in zip(names, params, grads)
    }


@torch.no_grad()
def encode(encoder: Encoder, samples: t.Sequence[Sample], *, batch_size: int = 1024) -> FloatArray:
    """Encode samples with dropout disabled, as a single view.

    Returns
    -------
    FloatArray
        An `M x D` matrix of representations, in sample order.
    """
    if not samples:
        return np.zeros((0, encoder.config.output_dim), dtype=np.float64)

    chunks = [
        encoder(pool_batch(samples[start : start + batch_size])).numpy()
        for start in range(0, len(samples), batch_size)
    ]
    return np.concatenate(chunks, axis=0)

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
