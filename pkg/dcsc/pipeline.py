"""End-to-end runs: split, warm-up, head initialization, clustering and evaluation."""

from __future__ import annotations

import logging
import pathlib
import typing as t

import attr

from dcsc import synth
from dcsc.checkpoint import save_checkpoint
from dcsc.data.io import load_corpus
from dcsc.data.split import split_corpus
from dcsc.errors import DataMismatchError
from dcsc.events import EpochCompletedEvent, StageCompletedEvent
from dcsc.manifest import RunManifest, write_json
from dcsc.trainer import Trainer, baseline, initial_state

if t.TYPE_CHECKING:
    from dcsc.config import RunConfig
    from dcsc.data.corpus import Corpus
    from dcsc.events import TrainingEvent
    from dcsc.internal.types import HookT
    from dcsc.trainer import Evaluation, TrainState

__all__ = ("Datasets", "RunResult", "RunRecorder", "fingerprints", "load_datasets", "run_experiment")

logger = logging.getLogger(__name__)


@attr.frozen(slots=True, eq=False)
class Datasets:
    """The corpora of one run."""

    train: Corpus
    test: Corpus
    validation: Corpus | None = None


@attr.frozen(slots=True, eq=False)
class RunResult:
    """Everything a finished run produced."""

    manifest: RunManifest
    evaluation: Evaluation
    state: TrainState


@attr.define(slots=True, kw_only=True, eq=False)
class RunRecorder:
    """A training hook that collects the loss curves, accuracies and stage timings of a run."""

    losses: dict[str, dict[str, list[float]]] = attr.field(factory=dict)
    """Per-epoch mean of every loss term, by stage."""

    known_accuracy: list[float] = attr.field(factory=list)
    stage_seconds: dict[str, float] = attr.field(factory=dict)
    aborted: bool = False

    def __call__(self, event: TrainingEvent) -> None:
        if isinstance(event, EpochCompletedEvent):
            for key, value in event.mean_losses.items():
                stage, _, term = key.partition(".")
                self.losses.setdefault(stage, {}).setdefault(term, []).append(value)
            if event.known_accuracy is not None:
                self.known_accuracy.append(event.known_accuracy)

        elif isinstance(event, StageCompletedEvent):
            self.stage_seconds[event.stage] = self.stage_seconds.get(event.stage, 0.0) + event.seconds
            self.aborted = self.aborted or event.aborted


def fingerprints(datasets: Datasets) -> dict[str, str]:
    """Content hash of every corpus of a run, by role."""
    prints = {"train": datasets.train.fingerprint(), "test": datasets.test.fingerprint()}
    if datasets.validation is not None:
        prints["validation"] = datasets.validation.fingerprint()
    return prints


def load_datasets(config: RunConfig) -> Datasets:
    """Generate the configured synthetic corpora or read them from disk.

    Raises
    ------
    MalformedCorpusError
        If a corpus file is malformed.
    """
    data = config.data
    if data.synth is not None:
        splits = synth.generate_splits(synth.preset(data.synth, seed=data.synth_seed))
        return Datasets(train=splits.train, test=splits.test, validation=splits.validation)

    train = load_corpus(t.cast(str, data.train), num_intents=data.num_intents)
    num_intents = train.num_intents
    return Datasets(
        train=train,
        test=load_corpus(t.cast(str, data.test), num_intents=num_intents),
        validation=load_corpus(data.validation, num_intents=num_intents) if data.validation else None,
    )


def run_experiment(
    config: RunConfig,
    *,
    hooks: t.Sequence[HookT] = (),
    out: str | pathlib.Path | None = None,
    expected_fingerprints: t.Mapping[str, str] | None = None,
) -> RunResult:
    """Run one configuration from data to final metrics and write its artifacts.

    Artifacts written into the output directory: `manifest.json`, `metrics.json`, and
    `checkpoints/warmup.npz` and `checkpoints/cluster.npz`.

    Parameters
    ----------
    config : RunConfig
        The resolved run configuration.
    hooks : t.Sequence[HookT]
        Hooks to attach to the trainer.
    out : str | pathlib.Path | None
        Output directory, defaults to `config.out`.
    expected_fingerprints : t.Mapping[str, str] | None
        Corpus fingerprints recorded by an earlier run. Every role present here must match.

    Returns
    -------
    RunResult
        The manifest, the final evaluation and the trained state.

    Raises
    ------
    DataMismatchError
        If a corpus differs from its expected fingerprint.
    """
    out_dir = pathlib.Path(out if out is not None else config.out)
    datasets = load_datasets(config)

    prints = fingerprints(datasets)
    if expected_fingerprints is not None:
        changed = [role for role, value in expected_fingerprints.items() if prints.get(role) != value]
        if changed:
            raise DataMismatchError(changed)

    split = split_corpus(datasets.train, config.split)
    test = split.relabel(datasets.test)
    validation = split.relabel(datasets.validation) if datasets.validation is not None else None

    encoder_config = config.encoder_config(datasets.train.input_dim)
    state = initial_state(
        encoder_config,
        config.train,
        known_intents=split.known_intents,
        num_intents=split.num_intents,
        inputs=split.training_samples(),
    )

    recorder = RunRecorder()
    trainer = Trainer(config.train, validation=tuple(validation) if validation is not None else ())
    trainer.add_hook(recorder)
    for hook in hooks:
        trainer.add_hook(hook)

    raw_baseline = baseline(
        test, split.num_intents, seed=state.streams.seed("eval"), n_init=config.train.kmeans_n_init
    )
    init_baseline = trainer.evaluate(state, test).metrics
    logger.info(f"Raw-feature K-Means++ baseline: {raw_baseline.format()}")

    trainer.warmup_stage(state, split)
    save_checkpoint(out_dir / "checkpoints" / "warmup.npz", state, intent_relabeling=split.intent_relabeling)

    trainer.init_cluster_head(state, split)
    trainer.clustering_stage(state, split)
    save_checkpoint(out_dir / "checkpoints" / "cluster.npz", state, intent_relabeling=split.intent_relabeling)

    evaluation = trainer.evaluate(state, test)

    manifest = RunManifest(
        config=config.to_dict(),
        seed=config.train.seed,
        fingerprints=prints,
        known_intents=split.known_intents,
        num_intents=split.num_intents,
        stage_seconds=recorder.stage_seconds,
        losses=recorder.losses,
        known_accuracy=recorder.known_accuracy,
        metrics=evaluation.metrics,
        head_metrics=evaluation.head_metrics,
        raw_baseline=raw_baseline,
        init_baseline=init_baseline,
        aborted=recorder.aborted,
    )
    manifest.write(out_dir / "manifest.json")
    write_json(out_dir / "metrics.json", evaluation.metrics.to_dict())

    return RunResult(manifest=manifest, evaluation=evaluation, state=state)

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
