"""Loss terms of both training stages.

Every loss returns a [`LossOutput`][dcsc.losses.LossOutput] whose `value` is still attached to the
autograd graph, so the trainer can back-propagate through it and tests can ask for gradients with
respect to any input.
"""

from __future__ import annotations

import typing as t

import attr
import torch
import torch.nn.functional as F

from dcsc.errors import (
    BatchMismatchError,
    ConfigError,
    InvalidAssignmentError,
    InvalidLabelError,
    InvalidTemperatureError,
    ShapeMismatchError,
)

if t.TYPE_CHECKING:
    from dcsc.encoder import ViewPair
    from dcsc.internal.types import Stage

__all__ = (
    "DEFAULT_TAU",
    "LossOutput",
    "LossGradients",
    "cross_entropy",
    "supervised_contrastive",
    "unsupervised_contrastive",
    "cluster_logits",
    "swapped_cross_entropy",
    "pseudo_supervised_contrastive",
    "compose",
)

DEFAULT_TAU: t.Final[float] = 0.07

ASSIGNMENT_ROW_TOLERANCE: t.Final[float] = 1e-6

STAGE_PARTS: t.Final[dict[str, frozenset[str]]] = {
    "warmup": frozenset({"ce", "sc"}),
    "cluster": frozenset({"sinkhorn", "pseudo"}),
    "cluster_sup": frozenset({"ce", "sc"}),
}
"""Which terms each composed objective is made of."""


@attr.frozen(slots=True, eq=False)
class LossGradients:
    """Gradients of a loss with respect to the representations and, optionally, a weight matrix."""

    grad_z: torch.Tensor
    grad_z_prime: torch.Tensor
    grad_weights: torch.Tensor | None = None


@attr.frozen(slots=True, eq=False)
class LossOutput:
    """The value of a loss term on one batch."""

    name: str
    """Short name of the term, e.g. `ce`, `sc`, `unsup`, `sinkhorn`, `pseudo`."""

    value: torch.Tensor
    """Zero-dimensional tensor, attached to the autograd graph."""

    batch_id: int | None = None
    """The batch the term was computed on, `None` if unknown."""

    skipped: bool = False
    """Whether the term had nothing to contribute (e.g. no anchor had a positive)."""

    def item(self) -> float:
        """The loss value as a Python float."""
        return float(self.value.detach())

    def gradients(self, *inputs: torch.Tensor) -> tuple[torch.Tensor, ...]:
        """Gradients of the value with respect to `inputs`; inputs the loss does not depend on get zeros."""
        if not self.value.requires_grad:
            return tuple(torch.zeros_like(x) for x in inputs)
        grads = torch.autograd.grad(self.value, inputs, retain_graph=True, allow_unused=True)
        return tuple(torch.zeros_like(x) if g is None else g for x, g in zip(inputs, grads))

    def view_gradients(self, views: ViewPair, weights: torch.Tensor | None = None) -> LossGradients:
        """Gradients with respect to `Z`, `Z'` and, if given, a classifier or prototype matrix."""
        if weights is None:
            grad_z, grad_z_prime = self.gradients(views.z, views.z_prime)
            return LossGradients(grad_z=grad_z, grad_z_prime=grad_z_prime)

        grad_z, grad_z_prime, grad_weights = self.gradients(views.z, views.z_prime, weights)
        return LossGradients(grad_z=grad_z, grad_z_prime=grad_z_prime, grad_weights=grad_weights)


def _check_tau(tau: float) -> None:
    if not tau > 0.0:
        raise InvalidTemperatureError(tau, f"The temperature must be positive, got {tau}.")


def _as_labels(labels: torch.Tensor | t.Sequence[int]) -> torch.Tensor:
    return torch.as_tensor(labels, dtype=torch.int64)


def cross_entropy(
    views: ViewPair | torch.Tensor, labels: torch.Tensor | t.Sequence[int], weights: torch.Tensor
) -> LossOutput:
    """Classification loss of the first view against a `K x D` classifier.

    Used both with the warm-up classifier `W` and with the first `K` shared cluster centers.

    Parameters
    ----------
    views : ViewPair | torch.Tensor
        The views of a labeled batch, or the `N x D` representations directly.
    labels : torch.Tensor | t.Sequence[int]
        Known-intent labels in `[0, K)`.
    weights : torch.Tensor
        The `K x D` classifier weights. No bias is used.

    Raises
    ------
    InvalidLabelError
        If a label is outside `[0, K)`.
    """
    z = views if isinstance(views, torch.Tensor) else views.z
    batch_id = None if isinstance(views, torch.Tensor) else views.batch_id
    y = _as_labels(labels)
    num_classes = int(weights.shape[0])

    if z.shape[1] != weights.shape[1]:
        raise ShapeMismatchError((num_classes, int(z.shape[1])), tuple(weights.shape))
    if y.shape != (z.shape[0],):
        raise ShapeMismatchError((int(z.shape[0]),), tuple(y.shape))
    if y.numel() and (int(y.min()) < 0 or int(y.max()) >= num_classes):
        bad = int(y.max()) if int(y.max()) >= num_classes else int(y.min())
        raise InvalidLabelError(bad, num_classes, f"Label {bad} is outside of [0, {num_classes}).")

    value = F.cross_entropy(z @ weights.T, y, reduction="mean")
    return LossOutput(name="ce", value=value, batch_id=batch_id)


def _contrastive(features: torch.Tensor, positives: torch.Tensor, tau: float) -> tuple[torch.Tensor, bool]:
    """Sum over anchors of the mean negative log-ratio over each anchor's positives.

    Anchors without positives contribute zero. Returns the value and whether every anchor was skipped.
    """
    similarity = features @ features.T / tau
    self_mask = torch.eye(features.shape[0], dtype=torch.bool)
    log_normalizer = torch.logsumexp(similarity.masked_fill(self_mask, float("-inf")), dim=1, keepdim=True)
    log_ratio = similarity - log_normalizer

    positives = positives & ~self_mask
    counts = positives.sum(dim=1)
    active = counts > 0

    summed = torch.where(positives, log_ratio, torch.zeros_like(log_ratio)).sum(dim=1)
    per_anchor = torch.where(active, -summed / counts.clamp(min=1).to(features.dtype), torch.zeros_like(summed))
    return per_anchor.sum(), not bool(active.any())


def _label_positives(labels: torch.Tensor) -> torch.Tensor:
    return labels[:, None] == labels[None, :]


def _stacked_labels(views: ViewPair, labels: torch.Tensor | t.Sequence[int]) -> torch.Tensor:
    y = _as_labels(labels)
    n = views.batch_size
    if y.shape == (n,):
        return torch.cat([y, y])
    if y.shape == (2 * n,):
        return y
    raise ShapeMismatchError((2 * n,), tuple(y.shape))


def supervised_contrastive(
    views: ViewPair, labels: torch.Tensor | t.Sequence[int], tau: float = DEFAULT_TAU
) -> LossOutput:
    """Supervised contrastive loss over all `2N` anchors of a labeled batch.

    Parameters
    ----------
    views : ViewPair
        The two views of the batch.
    labels : torch.Tensor | t.Sequence[int]
        Either `N` labels (duplicated onto both views) or `2N` labels for the stacked views.
    tau : float
        The temperature.

    Raises
    ------
    InvalidTemperatureError
        If `tau <= 0`.
    """
    _check_tau(tau)
    value, skipped = _contrastive(views.stacked, _label_positives(_stacked_labels(views, labels)), tau)
    return LossOutput(name="sc", value=value, batch_id=views.batch_id, skipped=skipped)


def unsupervised_contrastive(views: ViewPair, tau: float = DEFAULT_TAU) -> LossOutput:
    """Instance contrastive loss where each anchor's only positive is its other view.

    Raises
    ------
    InvalidTemperatureError
        If `tau <= 0`.
    """
    _check_tau(tau)
    n = views.batch_size
    partner = torch.arange(2 * n).roll(n)
    positives = torch.zeros((2 * n, 2 * n), dtype=torch.bool)
    positives[torch.arange(2 * n), partner] = True
    value, _ = _contrastive(views.stacked, positives, tau)
    return LossOutput(name="unsup", value=value, batch_id=views.batch_id)


def cluster_logits(views: ViewPair, prototypes: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
    """Plain dot products of both views with the `G x D` prototypes.

    Returns
    -------
    tuple[torch.Tensor, torch.Tensor]
        The `N x G` logits `Q` and `Q'`.
    """
    if prototypes.ndim != 2 or prototypes.shape[1] != views.z.shape[1]:
        raise ShapeMismatchError((-1, int(views.z.shape[1])), tuple(prototypes.shape))
    return views.z @ prototypes.T, views.z_prime @ prototypes.T


def _check_assignment(name: str, targets: torch.Tensor, logits: torch.Tensor) -> None:
    if targets.shape != logits.shape:
        raise ShapeMismatchError(tuple(logits.shape), tuple(targets.shape))
    deviation = (targets.sum(dim=1) - 1.0).abs()
    if deviation.numel() and float(deviation.max()) > ASSIGNMENT_ROW_TOLERANCE:
        worst = float(deviation.max())
        raise InvalidAssignmentError(f"Rows of '{name}' must sum to 1, worst deviation is {worst:.3g}.")
    if bool((targets < 0).any()):
        raise InvalidAssignmentError(f"'{name}' contains negative probabilities.")


def swapped_cross_entropy(
    q: torch.Tensor,
    q_prime: torch.Tensor,
    assignment: torch.Tensor,
    assignment_prime: torch.Tensor,
    *,
    batch_id: int | None = None,
) -> LossOutput:
    """Swapped prediction: each view predicts the soft assignment computed from the other view.

    The targets are treated as constants.

    Parameters
    ----------
    q : torch.Tensor
        Logits of the first view, `N x G`.
    q_prime : torch.Tensor
        Logits of the second view, `N x G`.
    assignment : torch.Tensor
        Soft assignment `A` derived from `q`; the target of `q_prime`.
    assignment_prime : torch.Tensor
        Soft assignment `A'` derived from `q_prime`; the target of `q`.
    batch_id : int | None
        The batch the logits were computed on.

    Raises
    ------
    InvalidAssignmentError
        If a target row does not sum to one within `1e-6`.
    """
    _check_assignment("A", assignment, q_prime)
    _check_assignment("A'", assignment_prime, q)

    a = assignment.detach().to(q.dtype)
    a_prime = assignment_prime.detach().to(q.dtype)

    left = -(a_prime * F.log_softmax(q, dim=1)).sum(dim=1).mean()
    right = -(a * F.log_softmax(q_prime, dim=1)).sum(dim=1).mean()
    return LossOutput(name="sinkhorn", value=(left + right) / 2, batch_id=batch_id)


def pseudo_supervised_contrastive(
    views: ViewPair, pseudo_labels: torch.Tensor | t.Sequence[int], tau: float = DEFAULT_TAU
) -> LossOutput:
    """Supervised contrastive loss driven by hard pseudo labels `B || B'`.

    Parameters
    ----------
    views : ViewPair
        The two views of the batch.
    pseudo_labels : torch.Tensor | t.Sequence[int]
        The `2N` hard assignments of the stacked views.
    tau : float
        The temperature.
    """
    _check_tau(tau)
    labels = _as_labels(pseudo_labels)
    if labels.shape != (2 * views.batch_size,):
        raise ShapeMismatchError((2 * views.batch_size,), tuple(labels.shape))

    value, skipped = _contrastive(views.stacked, _label_positives(labels), tau)
    return LossOutput(name="pseudo", value=value, batch_id=views.batch_id, skipped=skipped)


def compose(stage: Stage, *parts: LossOutput) -> LossOutput:
    """Sum the terms of a stage objective.

    - `warmup`: cross entropy + supervised contrastive.
    - `cluster`: swapped cross entropy + pseudo-label contrastive.
    - `cluster_sup`: cross entropy on the shared centers + supervised contrastive.

    Raises
    ------
    BatchMismatchError
        If the parts were computed on different batches.
    ConfigError
        If the stage is unknown or the parts do not match it.
    """
    expected = STAGE_PARTS.get(stage)
    if expected is None:
        raise ConfigError(f"Unknown stage '{stage}', expected one of {sorted(STAGE_PARTS)}.")

    names = [part.name for part in parts]
    if sorted(names) != sorted(expected):
        raise ConfigError(f"Stage '{stage}' is made of {sorted(expected)}, got {names}.")

    batch_ids = {part.batch_id for part in parts if part.batch_id is not None}
    if len(batch_ids) > 1:
        raise BatchMismatchError(f"Cannot compose terms computed on different batches: {sorted(batch_ids)}.")

    value = parts[0].value
    for part in parts[1:]:
        value = value + part.value

    return LossOutput(
        name=stage,
        value=value,
        batch_id=next(iter(batch_ids), None),
        skipped=all(part.skipped for part in parts),
    )

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
