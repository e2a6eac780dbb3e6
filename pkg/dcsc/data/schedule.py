from __future__ import annotations

import logging
import math
import typing as t

import numpy as np

from dcsc.errors import ConfigError

if t.TYPE_CHECKING:
    from dcsc.data.corpus import Sample
    from dcsc.internal.types import BatchMode, Phase

__all__ = ("BatchSchedule",)

logger = logging.getLogger(__name__)


class _PoolCursor:
    """Walks a sample pool in shuffled passes, without replacement within a pass."""

    __slots__ = ("_pool", "_rng", "_order", "_position")

    def __init__(self, pool: t.Sequence[Sample], rng: np.random.Generator) -> None:
        self._pool = tuple(pool)
        self._rng = rng
        self._order: list[int] = []
        self._position = 0

    def __len__(self) -> int:
        return len(self._pool)

    def reshuffle(self) -> None:
        self._order = [int(i) for i in self._rng.permutation(len(self._pool))]
        self._position = 0

    def batches_per_pass(self, batch_size: int) -> int:
        return math.ceil(len(self._pool) / batch_size)

    def take(self, batch_size: int) -> list[Sample]:
        """The next batch; the last batch of a pass may be short, after which a new pass starts."""
        if self._position >= len(self._order):
            self.reshuffle()

        chosen = self._order[self._position : self._position + batch_size]
        self._position += len(chosen)
        return [self._pool[i] for i in chosen]


class BatchSchedule:
    """Alternates supervised batches from the labeled subset with unsupervised batches from the full training set.

    Parameters
    ----------
    labeled : t.Sequence[Sample]
        The labeled subset. Supervised batches are drawn only from here.
    training : t.Sequence[Sample]
        The full training set. Unsupervised (warm-up) and cluster batches are drawn from here.
    rng : np.random.Generator
        The generator driving all shuffles.
    supervised_batch_size : int
        Batch size of supervised steps.
    unsupervised_batch_size : int
        Batch size of unsupervised steps in the warm-up phase.
    cluster_batch_size : int
        Batch size of unsupervised steps in the cluster phase.
    """

    __slots__ = (
        "_labeled",
        "_training",
        "_next_mode",
        "supervised_batch_size",
        "unsupervised_batch_size",
        "cluster_batch_size",
        "_warned",
    )

    def __init__(
        self,
        labeled: t.Sequence[Sample],
        training: t.Sequence[Sample],
        rng: np.random.Generator,
        *,
        supervised_batch_size: int = 128,
        unsupervised_batch_size: int = 128,
        cluster_batch_size: int = 512,
    ) -> None:
        for name, size in (
            ("supervised_batch_size", supervised_batch_size),
            ("unsupervised_batch_size", unsupervised_batch_size),
            ("cluster_batch_size", cluster_batch_size),
        ):
            if size < 1:
                raise ConfigError(f"'{name}' must be positive, got {size}.")

        self._labeled = _PoolCursor(labeled, rng)
        self._training = _PoolCursor(training, rng)
        self._next_mode: BatchMode = "supervised"
        self.supervised_batch_size = supervised_batch_size
        self.unsupervised_batch_size = unsupervised_batch_size
        self.cluster_batch_size = cluster_batch_size
        self._warned = False

    @property
    def degenerate(self) -> bool:
        """Whether the labeled pool is empty, so the schedule only ever yields unsupervised batches."""
        return len(self._labeled) == 0

    def _unsupervised_size(self, phase: Phase) -> int:
        return self.cluster_batch_size if phase == "cluster" else self.unsupervised_batch_size

    def next_batch(self, phase: Phase) -> tuple[BatchMode, list[Sample]]:
        """Return the next batch and the kind of step it is meant for.

        Modes strictly alternate, starting with a supervised batch.

        Parameters
        ----------
        phase : Phase
            The training phase; it decides the size of unsupervised batches.

        Returns
        -------
        tuple[BatchMode, list[Sample]]
            The step mode and the samples of the batch.
        """
        if self.degenerate:
            if not self._warned:
                logger.warning("The labeled pool is empty, only unsupervised batches will be produced.")
                self._warned = True
            return "unsupervised", self._training.take(self._unsupervised_size(phase))

        mode = self._next_mode
        self._next_mode = "unsupervised" if mode == "supervised" else "supervised"

        if mode == "supervised":
            return mode, self._labeled.take(self.supervised_batch_size)
        return mode, self._training.take(self._unsupervised_size(phase))

    def epoch(self, phase: Phase, *, supervised: bool = True) -> t.Iterator[tuple[BatchMode, list[Sample]]]:
        """Yield the batches of one epoch.

        An epoch is one full pass over whichever pool needs more batches, with the other pool
        cycled (and reshuffled whenever it runs out). Both pools start a fresh pass at the beginning
        of every epoch.

        Parameters
        ----------
        phase : Phase
            The training phase.
        supervised : bool
            If `False`, supervised batches are omitted altogether and the epoch is a single
            pass over the training set.
        """
        self._labeled.reshuffle()
        self._training.reshuffle()
        self._next_mode = "supervised"

        unsupervised_steps = self._training.batches_per_pass(self._unsupervised_size(phase))

        if not supervised or self.degenerate:
            for _ in range(unsupervised_steps):
                yield "unsupervised", self._training.take(self._unsupervised_size(phase))
            return

        units = max(unsupervised_steps, self._labeled.batches_per_pass(self.supervised_batch_size))
        for _ in range(units):
            yield self.next_batch(phase)
            yield self.next_batch(phase)

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
