from __future__ import annotations

import typing as t

if t.TYPE_CHECKING:
    from dcsc.internal.types import BatchMode, Stage

__all__ = ("TrainingEvent", "StageStartedEvent", "StepCompletedEvent", "EpochCompletedEvent", "StageCompletedEvent")


class TrainingEvent:
    """Base class for all training events."""

    __slots__: t.Sequence[str] = ("_stage",)

    def __init__(self, stage: Stage) -> None:
        self._stage = stage

    @property
    def stage(self) -> Stage:
        """The stage the event belongs to. Supervised steps of the clustering stage report `cluster_sup`."""
        return self._stage

    def __repr__(self) -> str:
        return f"{type(self).__name__}(stage={self._stage!r})"


class StageStartedEvent(TrainingEvent):
    """Dispatched before the first epoch of a stage."""

    __slots__: t.Sequence[str] = ("_epochs",)

    def __init__(self, stage: Stage, epochs: int) -> None:
        super().__init__(stage)
        self._epochs = epochs

    @property
    def epochs(self) -> int:
        """How many epochs the stage is configured to run."""
        return self._epochs


class StepCompletedEvent(TrainingEvent):
    """Dispatched after every optimizer step."""

    __slots__: t.Sequence[str] = ("_epoch", "_step", "_mode", "_losses", "_batch_size")

    def __init__(
        self, stage: Stage, epoch: int, step: int, mode: BatchMode, losses: t.Mapping[str, float], batch_size: int
    ) -> None:
        super().__init__(stage)
        self._epoch = epoch
        self._step = step
        self._mode = mode
        self._losses = dict(losses)
        self._batch_size = batch_size

    @property
    def epoch(self) -> int:
        return self._epoch

    @property
    def step(self) -> int:
        """The global step counter within the stage, starting at 1."""
        return self._step

    @property
    def mode(self) -> BatchMode:
        return self._mode

    @property
    def losses(self) -> t.Mapping[str, float]:
        """Value of every loss term of this step, by term name."""
        return self._losses

    @property
    def batch_size(self) -> int:
        return self._batch_size


class EpochCompletedEvent(TrainingEvent):
    """Dispatched at the end of every epoch.

    A hook returning [`HookResult(abort=True)`][dcsc.abc.hookable.HookResult] here stops training.
    """

    __slots__: t.Sequence[str] = ("_epoch", "_mean_losses", "_known_accuracy", "_validation_accuracy")

    def __init__(
        self,
        stage: Stage,
        epoch: int,
        mean_losses: t.Mapping[str, float],
        known_accuracy: float | None,
        validation_accuracy: float | None = None,
    ) -> None:
        super().__init__(stage)
        self._epoch = epoch
        self._mean_losses = dict(mean_losses)
        self._known_accuracy = known_accuracy
        self._validation_accuracy = validation_accuracy

    @property
    def epoch(self) -> int:
        """The epoch that just ended, starting at 1."""
        return self._epoch

    @property
    def mean_losses(self) -> t.Mapping[str, float]:
        """Mean value of every loss term over the epoch."""
        return self._mean_losses

    @property
    def known_accuracy(self) -> float | None:
        """Classifier accuracy on the labeled subset, if there is one."""
        return self._known_accuracy

    @property
    def validation_accuracy(self) -> float | None:
        """Classifier accuracy on labeled validation samples of known intents, if any were given."""
        return self._validation_accuracy


class StageCompletedEvent(TrainingEvent):
    """Dispatched when a stage ends, whether it ran all its epochs or was aborted."""

    __slots__: t.Sequence[str] = ("_epochs_run", "_seconds", "_aborted")

    def __init__(self, stage: Stage, epochs_run: int, seconds: float, aborted: bool) -> None:
        super().__init__(stage)
        self._epochs_run = epochs_run
        self._seconds = seconds
        self._aborted = aborted

    @property
    def epochs_run(self) -> int:
        return self._epochs_run

    @property
    def seconds(self) -> float:
        """Wall-clock duration of the stage."""
        return self._seconds

    @property
    def aborted(self) -> bool:
        return self._aborted

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
