import typing as t

import attr
import numpy as np
import pytest
import torch

import dcsc
from dcsc.abc import HookResult
from dcsc.config import TrainConfig
from dcsc.data.split import split_corpus
from dcsc.errors import ConfigError, InsufficientDataError, TrainingDivergedError
from dcsc.trainer import baseline, initial_state


@pytest.fixture
def split(blobs: dcsc.Corpus) -> dcsc.SplitResult:
    return split_corpus(blobs, dcsc.SplitSpec(known_fraction=0.5, labeled_ratio=0.2, seed=0))


def _state(encoder_config: dcsc.EncoderConfig, config: TrainConfig) -> dcsc.TrainState:
    return initial_state(encoder_config, config, known_intents=2, num_intents=4)


def _parameters(state: dcsc.TrainState) -> list[torch.Tensor]:
    return [p.detach().clone() for p in state.encoder.parameters()]


def _run(
    split: dcsc.SplitResult,
    encoder_config: dcsc.EncoderConfig,
    config: TrainConfig,
    *hooks: t.Callable[[dcsc.TrainingEvent], HookResult | None],
) -> dcsc.TrainState:
    trainer = dcsc.Trainer(config)
    for hook in hooks:
        trainer.add_hook(hook)

    state = _state(encoder_config, config)
    trainer.warmup_stage(state, split)
    trainer.init_cluster_head(state, split)
    return trainer.clustering_stage(state, split)


def test_zero_epochs_change_nothing(
    split: dcsc.SplitResult, small_encoder_config: dcsc.EncoderConfig, fast_config: TrainConfig
) -> None:
    config = attr.evolve(fast_config, warmup_epochs=0)
    state = _state(small_encoder_config, config)
    before = _parameters(state)

    dcsc.warmup_stage(state, config, split)

    assert state.warmup_epochs_run == 0
    assert state.history.terms("warmup") == {}
    assert all(torch.equal(a, b) for a, b in zip(before, _parameters(state)))


def test_warmup_records_every_term(
    split: dcsc.SplitResult, small_encoder_config: dcsc.EncoderConfig, fast_config: TrainConfig
) -> None:
    state = dcsc.warmup_stage(_state(small_encoder_config, fast_config), fast_config, split)

    terms = state.history.terms("warmup")
    assert set(terms) == {"ce", "sc", "unsup"}
    assert all(len(values) == 2 for values in terms.values())
    assert state.warmup_epochs_run == 2
    assert len(state.known_accuracy) == 2


def test_cluster_head_shares_the_classifier(
    split: dcsc.SplitResult, small_encoder_config: dcsc.EncoderConfig, fast_config: TrainConfig
) -> None:
    state = _state(small_encoder_config, fast_config)
    dcsc.init_cluster_head(state, split, fast_config)

    assert state.classifier is None
    assert state.prototypes is not None
    assert state.prototypes.num_clusters == 4
    assert state.prototypes.shares_storage(state.head)

    dcsc.clustering_stage(state, fast_config, split)
    assert state.prototypes.shares_storage(state.head)
    np.testing.assert_allclose(np.linalg.norm(state.prototypes.numpy(), axis=1), 1.0, rtol=0, atol=1e-9)
    assert set(state.history.terms("cluster")) == {"sinkhorn", "pseudo"}
    assert set(state.history.terms("cluster_sup")) == {"ce", "sc"}


def test_ablation_skips_supervised_cluster_steps(
    split: dcsc.SplitResult, small_encoder_config: dcsc.EncoderConfig, fast_config: TrainConfig
) -> None:
    config = attr.evolve(fast_config, ablation_no_sup_cluster=True)
    state = _run(split, small_encoder_config, config)

    assert state.history.terms("cluster_sup") == {}
    assert state.cluster_epochs_run == 2


def test_loss_history_stays_finite(
    split: dcsc.SplitResult, small_encoder_config: dcsc.EncoderConfig, fast_config: TrainConfig
) -> None:
    state = _run(split, small_encoder_config, fast_config)

    curves = state.history.to_dict()
    assert set(curves) == {"warmup", "cluster", "cluster_sup"}
    assert all(np.isfinite(values).all() and len(values) == 2 for terms in curves.values() for values in terms.values())
    assert all(np.isfinite(state.known_accuracy))


def test_clustering_stage_needs_a_head(
    split: dcsc.SplitResult, small_encoder_config: dcsc.EncoderConfig, fast_config: TrainConfig
) -> None:
    with pytest.raises(ConfigError):
        dcsc.clustering_stage(_state(small_encoder_config, fast_config), fast_config, split)


def test_hook_aborts_after_first_epoch(
    split: dcsc.SplitResult, small_encoder_config: dcsc.EncoderConfig, fast_config: TrainConfig
) -> None:
    events: list[dcsc.TrainingEvent] = []

    def hook(event: dcsc.TrainingEvent) -> HookResult | None:
        events.append(event)
        if isinstance(event, dcsc.EpochCompletedEvent):
            return HookResult(abort=True)
        return None

    state = _run(split, small_encoder_config, fast_config, hook)

    assert state.aborted
    assert state.warmup_epochs_run == 1
    assert state.cluster_epochs_run == 0

    assert isinstance(events[0], dcsc.StageStartedEvent)
    assert events[0].epochs == 2
    steps = [e for e in events if isinstance(e, dcsc.StepCompletedEvent)]
    assert steps
    assert [e.step for e in steps] == list(range(1, len(steps) + 1))
    completed = [e for e in events if isinstance(e, dcsc.StageCompletedEvent)]
    assert [(e.stage, e.epochs_run, e.aborted) for e in completed] == [("warmup", 1, True), ("cluster", 0, True)]


def test_every_hook_sees_the_aborting_event(
    split: dcsc.SplitResult, small_encoder_config: dcsc.EncoderConfig, fast_config: TrainConfig
) -> None:
    seen: list[int] = []

    def aborting(event: dcsc.TrainingEvent) -> HookResult | None:
        return HookResult(abort=True) if isinstance(event, dcsc.EpochCompletedEvent) else None

    def counting(event: dcsc.TrainingEvent) -> None:
        if isinstance(event, dcsc.EpochCompletedEvent):
            seen.append(event.epoch)

    config = attr.evolve(fast_config, cluster_epochs=0)
    trainer = dcsc.with_hook(counting)(dcsc.Trainer(config).add_hook(aborting))
    trainer.warmup_stage(_state(small_encoder_config, config), split)

    assert seen == [1]


def test_training_is_deterministic(
    split: dcsc.SplitResult, small_encoder_config: dcsc.EncoderConfig, fast_config: TrainConfig
) -> None:
    first = _run(split, small_encoder_config, fast_config)
    second = _run(split, small_encoder_config, fast_config)

    assert all(torch.equal(a, b) for a, b in zip(_parameters(first), _parameters(second)))
    assert first.history.to_dict() == second.history.to_dict()


def test_non_finite_weights_stop_training(
    split: dcsc.SplitResult, small_encoder_config: dcsc.EncoderConfig, fast_config: TrainConfig
) -> None:
    state = _state(small_encoder_config, fast_config)
    with torch.no_grad():
        state.encoder.layers[0].weight[0, 0] = float("nan")

    with pytest.raises(TrainingDivergedError) as exc_info:
        dcsc.warmup_stage(state, fast_config, split)

    assert exc_info.value.stage == "warmup"
    assert exc_info.value.epoch == 1
    assert exc_info.value.step == 1


def test_warmup_needs_labeled_samples(
    blobs: dcsc.Corpus, small_encoder_config: dcsc.EncoderConfig, fast_config: TrainConfig
) -> None:
    split = split_corpus(blobs, dcsc.SplitSpec(known_fraction=0.5, labeled_ratio=0.2))
    empty = attr.evolve(split, labeled=(), hidden_truth=())

    with pytest.raises(InsufficientDataError):
        dcsc.warmup_stage(_state(small_encoder_config, fast_config), fast_config, empty)


def test_evaluate_distinct_points(small_encoder_config: dcsc.EncoderConfig, fast_config: TrainConfig) -> None:
    rng = np.random.default_rng(0)
    test_set = [dcsc.Sample(f"t{i}", rng.normal(size=6), i) for i in range(4)]

    evaluation = dcsc.evaluate(_state(small_encoder_config, fast_config), test_set, fast_config)
    assert evaluation.metrics.acc == 1.0
    assert evaluation.metrics.ari == 1.0
    assert evaluation.metrics.nmi == pytest.approx(1.0, abs=1e-12)
    assert sorted(evaluation.predictions.tolist()) == [0, 1, 2, 3]
    assert evaluation.head_metrics is None


def test_untrained_encoder_scores_chance_on_random_labels(
    small_encoder_config: dcsc.EncoderConfig, fast_config: TrainConfig
) -> None:
    scores: list[dcsc.MetricReport] = []
    for seed in range(20):
        rng = np.random.default_rng(seed)
        test_set = [dcsc.Sample(f"t{i}", rng.normal(size=6), int(rng.integers(4))) for i in range(400)]
        config = attr.evolve(fast_config, seed=seed)
        scores.append(dcsc.evaluate(_state(small_encoder_config, config), test_set, config).metrics)

    # Optimal matching alone lifts the accuracy of an independent partition a little above 1 / G.
    assert all(report.acc >= 0.25 for report in scores)
    assert np.mean([report.acc for report in scores]) < 0.35
    assert abs(np.mean([report.ari for report in scores])) < 0.02


def test_evaluate_needs_enough_samples(small_encoder_config: dcsc.EncoderConfig, fast_config: TrainConfig) -> None:
    test_set = [dcsc.Sample(f"t{i}", np.full(6, float(i)), i) for i in range(3)]

    with pytest.raises(InsufficientDataError):
        dcsc.evaluate(_state(small_encoder_config, fast_config), test_set, fast_config)

    with pytest.raises(InsufficientDataError):
        baseline(test_set, 4)


def test_baseline_on_separated_blobs(blobs: dcsc.Corpus) -> None:
    report = baseline(blobs, 4, seed=0)
    assert report.acc == 1.0
    assert report.ari == 1.0


@pytest.mark.slow
def test_known_intents_are_learned() -> None:
    corpus = dcsc.generate(dcsc.BlobSpec(num_clusters=2, samples_per_cluster=100, input_dim=8, sigma=0.5, seed=1))
    split = split_corpus(corpus, dcsc.SplitSpec(known_fraction=1.0, labeled_ratio=0.5, seed=0))
    config = TrainConfig(warmup_epochs=30, cluster_epochs=0, learning_rate=1e-2, seed=0)
    encoder_config = dcsc.EncoderConfig(input_dim=8, hidden_dims=(32,), output_dim=16)

    state = initial_state(encoder_config, config, known_intents=2, num_intents=2, inputs=split.training_samples())
    dcsc.warmup_stage(state, config, split)

    assert state.known_accuracy[-1] > 0.95
