"""The two-stage training schedule.

The warm-up stage alternates supervised steps (cross entropy and supervised contrastive loss on
labeled batches) with unsupervised instance contrastive steps on the full training set. The cluster
head is then initialized from K-Means++ centers aligned with the warm-up classifier, and the
clustering stage alternates swapped Sinkhorn prediction plus pseudo-label contrastive steps with
supervised steps on the shared known-intent rows of the prototypes.
"""

from __future__ import annotations

import collections
import logging
import math
import time
import typing as t

import attr
import numpy as np
import torch
from torch import nn

from dcsc import losses
from dcsc.abc.hookable import Hookable
from dcsc.assignment.kmeans import kmeans_pp
from dcsc.assignment.prototypes import PrototypeBank, align_and_extract
from dcsc.assignment.sinkhorn import harden, sinkhorn_assign
from dcsc.data.schedule import BatchSchedule
from dcsc.encoder import DTYPE, Encoder, encode, forward_two_views, pool_batch
from dcsc.errors import (
    ConfigError,
    InsufficientDataError,
    MalformedCorpusError,
    NumericOverflowError,
    TrainingDivergedError,
)
from dcsc.events import EpochCompletedEvent, StageCompletedEvent, StageStartedEvent, StepCompletedEvent
from dcsc.metrics import MetricReport, score
from dcsc.rng import SeedStreams

if t.TYPE_CHECKING:
    from dcsc.config import TrainConfig
    from dcsc.data.corpus import Corpus, Sample
    from dcsc.data.split import SplitResult
    from dcsc.encoder import EncoderConfig, ViewPair
    from dcsc.internal.types import BatchMode, FloatArray, HookT, IntArray, Phase, Stage

__all__ = (
    "LossHistory",
    "TrainState",
    "Evaluation",
    "Trainer",
    "initial_state",
    "warmup_stage",
    "init_cluster_head",
    "clustering_stage",
    "evaluate",
    "known_intent_accuracy",
    "head_assignments",
    "baseline",
)

logger = logging.getLogger(__name__)


class LossHistory:
    """Per-epoch mean of every loss term, grouped by stage."""

    __slots__: t.Sequence[str] = ("_records",)

    def __init__(self) -> None:
        self._records: dict[str, dict[str, list[float]]] = {}

    def record(self, stage: Stage, means: t.Mapping[str, float]) -> None:
        terms = self._records.setdefault(stage, {})
        for name, value in means.items():
            terms.setdefault(name, []).append(value)

    def terms(self, stage: Stage) -> dict[str, list[float]]:
        """Per-epoch means of every term recorded for `stage`; empty if the stage never ran a step."""
        return {name: list(values) for name, values in self._records.get(stage, {}).items()}

    def to_dict(self) -> dict[str, dict[str, list[float]]]:
        return {stage: self.terms(t.cast("Stage", stage)) for stage in self._records}


@attr.define(slots=True, kw_only=True, eq=False)
class TrainState:
    """Everything that changes during training."""

    encoder: Encoder
    """The trainable encoder."""

    known_intents: int
    """`K`."""

    num_intents: int
    """`G`."""

    streams: SeedStreams
    """Random streams of the run."""

    classifier: nn.Parameter | None = None
    """The `K x D` warm-up classifier `W`; `None` once the cluster head replaced it."""

    prototypes: PrototypeBank | None = None
    """The cluster head, set by [`init_cluster_head`][dcsc.trainer.init_cluster_head]."""

    optimizer: torch.optim.Optimizer | None = None
    """AdamW over the parameters of the current stage, holding their moment estimates."""

    warmup_epochs_run: int = 0
    cluster_epochs_run: int = 0

    history: LossHistory = attr.field(factory=LossHistory)
    """Per-epoch loss curves."""

    known_accuracy: list[float] = attr.field(factory=list)
    """Classifier accuracy on the labeled subset after every epoch of either stage."""

    stage_seconds: dict[str, float] = attr.field(factory=dict)
    """Wall-clock duration of every completed stage."""

    aborted: bool = False
    """Set when a hook stopped training."""

    dropout_generator: torch.Generator = attr.field(init=False)
    """Generator all dropout mask seeds are drawn from."""

    def __attrs_post_init__(self) -> None:
        self.dropout_generator = self.streams.torch("dropout")

    @property
    def head(self) -> torch.Tensor:
        """The current known-intent classifier.

        During the clustering stage these are rows `[0, K)` of the prototypes, sharing their storage.
        """
        if self.prototypes is not None:
            return self.prototypes.classifier
        if self.classifier is None:
            raise ConfigError("This state has neither a classifier nor a cluster head.")
        return self.classifier


@attr.frozen(slots=True, eq=False)
class Evaluation:
    """Outcome of evaluating a trained state on a test set."""

    metrics: MetricReport
    """Scores of K-Means++ on the test representations."""

    predictions: IntArray
    """K-Means++ cluster of every test sample."""

    head_metrics: MetricReport | None = None
    """Scores of the argmax of the cluster head, if there is one."""


def _make_optimizer(params: t.Iterable[nn.Parameter], config: TrainConfig) -> torch.optim.Optimizer:
    return torch.optim.AdamW(
        list(params),
        lr=config.learning_rate,
        betas=config.betas,
        eps=config.adam_eps,
        weight_decay=config.weight_decay,
    )


def initial_state(
    encoder_config: EncoderConfig,
    config: TrainConfig,
    *,
    known_intents: int,
    num_intents: int,
    inputs: t.Sequence[Sample] = (),
) -> TrainState:
    """A freshly initialized encoder and warm-up classifier, ready for the warm-up stage.

    If `inputs` are given, the encoder standardizes its input with their per-feature statistics.
    """
    streams = SeedStreams(config.seed)
    generator = streams.torch("encoder")
    encoder = Encoder(encoder_config, generator=generator)
    if inputs:
        encoder.fit_input(pool_batch(inputs).numpy())

    bound = math.sqrt(6.0 / (known_intents + encoder_config.output_dim))
    weights = (torch.rand((known_intents, encoder_config.output_dim), generator=generator, dtype=DTYPE) * 2 - 1) * bound
    classifier = nn.Parameter(weights)

    return TrainState(
        encoder=encoder,
        known_intents=known_intents,
        num_intents=num_intents,
        streams=streams,
        classifier=classifier,
        optimizer=_make_optimizer([*encoder.parameters(), classifier], config),
    )


def _labels(batch: t.Sequence[Sample]) -> torch.Tensor:
    return torch.tensor([t.cast(int, sample.label) for sample in batch], dtype=torch.int64)


def _labeled_known(samples: t.Sequence[Sample], known_intents: int) -> list[Sample]:
    return [s for s in samples if s.label is not None and s.label < known_intents]


def known_intent_accuracy(state: TrainState, samples: t.Sequence[Sample]) -> float | None:
    """Accuracy of the current classifier on labeled samples of known intents.

    Samples without a label or with a label outside `[0, K)` are ignored. Returns `None` if none remain.
    """
    known = _labeled_known(samples, state.known_intents)
    if not known:
        return None

    representations = encode(state.encoder, known)
    head = state.head.detach().numpy()
    predictions = np.argmax(representations @ head.T, axis=1)
    truth = np.array([t.cast(int, s.label) for s in known])
    return float(np.mean(predictions == truth))


def head_assignments(state: TrainState, samples: t.Sequence[Sample]) -> IntArray:
    """Argmax of the cluster logits of every sample, with dropout disabled.

    Before the cluster head exists, the warm-up classifier is used instead and only known intents
    can be predicted.
    """
    if not samples:
        return np.zeros(0, dtype=np.int64)
    weights = state.prototypes.weights if state.prototypes is not None else state.head
    representations = encode(state.encoder, samples)
    return np.argmax(representations @ weights.detach().numpy().T, axis=1).astype(np.int64)


def _truth(test_set: Corpus | t.Sequence[Sample]) -> IntArray:
    samples = list(test_set)
    if any(s.label is None for s in samples):
        raise MalformedCorpusError("Every test sample needs a ground-truth label.")
    return np.array([t.cast(int, s.label) for s in samples], dtype=np.int64)


def baseline(
    test_set: Corpus | t.Sequence[Sample], num_intents: int, *, seed: int = 0, n_init: int = 1
) -> MetricReport:
    """Scores of K-Means++ on the mean-pooled raw input features.

    With `n_init > 1` the lowest-inertia run of several independently seeded ones is scored.

    Raises
    ------
    InsufficientDataError
        If the test set has fewer samples than `num_intents`.
    """
    samples = list(test_set)
    if len(samples) < num_intents:
        raise InsufficientDataError(len(samples), num_intents)
    features = pool_batch(samples).numpy()
    result = kmeans_pp(features, num_intents, np.random.default_rng(seed), n_init=n_init)
    return score(result.labels, _truth(samples))


class Trainer(Hookable):
    """Runs the training stages of one configuration and reports progress to hooks.

    Parameters
    ----------
    config : TrainConfig
        The training hyperparameters.
    validation : t.Sequence[Sample]
        Optional validation samples; the classifier accuracy on their known intents is reported
        after every epoch. They never take part in training.
    """

    __slots__: t.Sequence[str] = ("_config", "_hooks", "_validation")

    def __init__(self, config: TrainConfig, *, validation: t.Sequence[Sample] = ()) -> None:
        self._config = config
        self._hooks: list[HookT] = []
        self._validation = tuple(validation)

    @property
    def config(self) -> TrainConfig:
        return self._config

    @property
    def hooks(self) -> t.MutableSequence[HookT]:
        return self._hooks

    def _schedule(self, state: TrainState, split: SplitResult, phase: Phase) -> BatchSchedule:
        return BatchSchedule(
            split.labeled,
            split.training_samples(),
            state.streams.numpy(f"schedule.{phase}"),
            supervised_batch_size=self._config.supervised_batch_size,
            unsupervised_batch_size=self._config.unsupervised_batch_size,
            cluster_batch_size=self._config.cluster_batch_size,
        )

    def _views(self, state: TrainState, batch: t.Sequence[Sample]) -> ViewPair:
        return forward_two_views(state.encoder, pool_batch(batch), state.dropout_generator)

    def _warmup_step(
        self, state: TrainState, mode: BatchMode, batch: list[Sample]
    ) -> tuple[Stage, list[losses.LossOutput]]:
        views = self._views(state, batch)
        if mode == "supervised":
            labels = _labels(batch)
            parts = [
                losses.cross_entropy(views, labels, state.head),
                losses.supervised_contrastive(views, labels, self._config.tau),
            ]
            return "warmup", parts
        return "warmup", [losses.unsupervised_contrastive(views, self._config.tau)]

    def _cluster_step(
        self, state: TrainState, mode: BatchMode, batch: list[Sample]
    ) -> tuple[Stage, list[losses.LossOutput]]:
        bank = t.cast(PrototypeBank, state.prototypes)
        views = self._views(state, batch)

        if mode == "supervised":
            labels = _labels(batch)
            parts = [
                losses.cross_entropy(views, labels, bank.classifier),
                losses.supervised_contrastive(views, labels, self._config.tau),
            ]
            return "cluster_sup", parts

        q, q_prime = losses.cluster_logits(views, bank.weights)
        sinkhorn = self._config.sinkhorn
        soft = sinkhorn_assign(q.detach().numpy(), sinkhorn.epsilon, sinkhorn.iterations)
        soft_prime = sinkhorn_assign(q_prime.detach().numpy(), sinkhorn.epsilon, sinkhorn.iterations)

        swapped = losses.swapped_cross_entropy(
            q,
            q_prime,
            torch.from_numpy(soft.probabilities),
            torch.from_numpy(soft_prime.probabilities),
            batch_id=views.batch_id,
        )

        if views.batch_size < 2:
            logger.warning(f"Cluster batch of {views.batch_size} sample(s), skipping the pseudo-label term.")
            pseudo = losses.LossOutput(
                name="pseudo", value=torch.zeros((), dtype=DTYPE), batch_id=views.batch_id, skipped=True
            )
        else:
            pseudo_labels = np.concatenate([harden(soft).labels, harden(soft_prime).labels])
            pseudo = losses.pseudo_supervised_contrastive(views, torch.from_numpy(pseudo_labels), self._config.tau)

        return "cluster", [swapped, pseudo]

    def _run_stage(
        self,
        state: TrainState,
        split: SplitResult,
        phase: Phase,
        epochs: int,
        step: t.Callable[[TrainState, BatchMode, list[Sample]], tuple[Stage, list[losses.LossOutput]]],
        *,
        supervised: bool = True,
    ) -> None:
        stage: Stage = phase
        optimizer = t.cast(torch.optim.Optimizer, state.optimizer)
        schedule = self._schedule(state, split, phase)
        normalize = phase == "cluster" and state.encoder.config.normalize_output

        started = time.perf_counter()
        self._dispatch(StageStartedEvent(stage, epochs))
        logger.info(f"Starting {phase} stage: {epochs} epoch(s).")

        epochs_run = 0
        global_step = 0
        for epoch in range(1, epochs + 1):
            if state.aborted:
                break

            sums: dict[Stage, dict[str, float]] = collections.defaultdict(lambda: collections.defaultdict(float))
            counts: dict[Stage, dict[str, int]] = collections.defaultdict(lambda: collections.defaultdict(int))

            for mode, batch in schedule.epoch(phase, supervised=supervised):
                if not batch:
                    continue
                global_step += 1
                try:
                    term_stage, parts = step(state, mode, batch)
                except NumericOverflowError as exc:
                    raise TrainingDivergedError(stage, epoch, global_step, exc.layer) from exc

                total = losses.compose(term_stage, *parts) if len(parts) > 1 else parts[0]
                values = {part.name: part.item() for part in parts}
                if bad := next((name for name, value in values.items() if not math.isfinite(value)), None):
                    raise TrainingDivergedError(term_stage, epoch, global_step, bad)

                optimizer.zero_grad(set_to_none=True)
                total.value.backward()
                optimizer.step()
                if normalize:
                    t.cast(PrototypeBank, state.prototypes).normalize_()

                for name, value in values.items():
                    sums[term_stage][name] += value
                    counts[term_stage][name] += 1

                logger.debug(f"{term_stage} epoch {epoch} step {global_step}: {values}")
                self._dispatch(StepCompletedEvent(term_stage, epoch, global_step, mode, values, len(batch)))

            means_by_stage = {
                term_stage: {name: total / counts[term_stage][name] for name, total in terms.items()}
                for term_stage, terms in sums.items()
            }
            for term_stage, means in means_by_stage.items():
                state.history.record(term_stage, means)

            epochs_run = epoch
            if phase == "warmup":
                state.warmup_epochs_run += 1
            else:
                state.cluster_epochs_run += 1

            accuracy = known_intent_accuracy(state, split.labeled)
            if accuracy is not None:
                state.known_accuracy.append(accuracy)
            validation = known_intent_accuracy(state, self._validation) if self._validation else None

            flat_means = {f"{s}.{name}": v for s, means in means_by_stage.items() for name, v in means.items()}
            logger.info(
                f"{phase} epoch {epoch}/{epochs}: "
                + ", ".join(f"{name}={value:.4f}" for name, value in flat_means.items())
                + (f", known acc={accuracy:.4f}" if accuracy is not None else "")
            )

            if self._dispatch(EpochCompletedEvent(stage, epoch, flat_means, accuracy, validation)):
                logger.info(f"A hook stopped training after {phase} epoch {epoch}.")
                state.aborted = True

        seconds = time.perf_counter() - started
        state.stage_seconds[phase] = state.stage_seconds.get(phase, 0.0) + seconds
        self._dispatch(StageCompletedEvent(stage, epochs_run, seconds, state.aborted))

    def warmup_stage(self, state: TrainState, split: SplitResult) -> TrainState:
        """Run the warm-up stage.

        Raises
        ------
        InsufficientDataError
            If the split has no labeled sample.
        TrainingDivergedError
            If a loss term becomes non-finite.
        """
        if not split.labeled:
            raise InsufficientDataError(0, 1, "The warm-up stage needs at least one labeled sample.")
        if state.classifier is None:
            raise ConfigError("The warm-up stage needs the warm-up classifier; the cluster head already replaced it.")

        self._run_stage(state, split, "warmup", self._config.warmup_epochs, self._warmup_step)
        return state

    def init_cluster_head(self, state: TrainState, split: SplitResult) -> TrainState:
        """Initialize the shared cluster head from K-Means++ centers of the training representations.

        Raises
        ------
        InsufficientDataError
            If there are fewer training samples than intents.
        """
        samples = split.training_samples()
        if len(samples) < state.num_intents:
            raise InsufficientDataError(len(samples), state.num_intents)

        representations = encode(state.encoder, samples)
        clusters = kmeans_pp(
            representations,
            state.num_intents,
            state.streams.numpy("kmeans"),
            self._config.kmeans_max_iters,
            n_init=self._config.kmeans_n_init,
        )
        bank = align_and_extract(state.head, clusters.centers, normalize=state.encoder.config.normalize_output)
        logger.info(
            f"Initialized the cluster head: {state.num_intents} centers, known intents matched to "
            f"{bank.matching.columns.tolist() if bank.matching is not None else []}."
        )

        state.prototypes = bank
        state.classifier = None
        state.optimizer = _make_optimizer([*state.encoder.parameters(), bank.weights], self._config)
        return state

    def clustering_stage(self, state: TrainState, split: SplitResult) -> TrainState:
        """Run the clustering stage.

        Raises
        ------
        ConfigError
            If the cluster head was not initialized.
        TrainingDivergedError
            If a loss term becomes non-finite.
        """
        if state.prototypes is None:
            raise ConfigError("The clustering stage needs an initialized cluster head.")

        self._run_stage(
            state,
            split,
            "cluster",
            self._config.cluster_epochs,
            self._cluster_step,
            supervised=not self._config.ablation_no_sup_cluster,
        )
        return state

    def evaluate(self, state: TrainState, test_set: Corpus | t.Sequence[Sample]) -> Evaluation:
        """Cluster the test representations with K-Means++ and score them against the ground truth.

        Raises
        ------
        InsufficientDataError
            If the test set has fewer samples than intents.
        """
        samples = list(test_set)
        if len(samples) < state.num_intents:
            raise InsufficientDataError(len(samples), state.num_intents)

        truth = _truth(samples)
        representations: FloatArray = encode(state.encoder, samples)
        clusters = kmeans_pp(
            representations,
            state.num_intents,
            state.streams.numpy("eval"),
            self._config.kmeans_max_iters,
            n_init=self._config.kmeans_n_init,
        )
        metrics = score(clusters.labels, truth)
        head_metrics = score(head_assignments(state, samples), truth) if state.prototypes is not None else None

        logger.info(f"Test metrics: {metrics.format()}")
        return Evaluation(metrics=metrics, predictions=clusters.labels, head_metrics=head_metrics)


def warmup_stage(state: TrainState, config: TrainConfig, split: SplitResult) -> TrainState:
    """Run the warm-up stage without hooks. See [`Trainer.warmup_stage`][dcsc.trainer.Trainer.warmup_stage]."""
    return Trainer(config).warmup_stage(state, split)


def init_cluster_head(state: TrainState, split: SplitResult, config: TrainConfig) -> TrainState:
    """See [`Trainer.init_cluster_head`][dcsc.trainer.Trainer.init_cluster_head]."""
    return Trainer(config).init_cluster_head(state, split)


def clustering_stage(state: TrainState, config: TrainConfig, split: SplitResult) -> TrainState:
    """Run the clustering stage without hooks.

    See [`Trainer.clustering_stage`][dcsc.trainer.Trainer.clustering_stage].
    """
    return Trainer(config).clustering_stage(state, split)


def evaluate(state: TrainState, test_set: Corpus | t.Sequence[Sample], config: TrainConfig) -> Evaluation:
    """See [`Trainer.evaluate`][dcsc.trainer.Trainer.evaluate]."""
    return Trainer(config).evaluate(state, test_set)

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
