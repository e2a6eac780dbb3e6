from __future__ import annotations

import logging
import math
import typing as t

import attr
import numpy as np

from dcsc.data.corpus import Corpus, Sample
from dcsc.errors import InvalidSplitSpecError, MalformedCorpusError

if t.TYPE_CHECKING:
    from dcsc.internal.types import IntArray

__all__ = ("SplitSpec", "SplitResult", "split_corpus", "known_intent_count")

logger = logging.getLogger(__name__)


def _fraction(instance: SplitSpec, attribute: attr.Attribute[float], value: float) -> None:
    if not 0.0 < value <= 1.0:
        raise InvalidSplitSpecError(f"'{attribute.name}' must lie in (0, 1], got {value}.")


@attr.frozen(slots=True)
class SplitSpec:
    """How a training corpus is divided into known and unknown intents.

    Parameters
    ----------
    known_fraction : float
        Fraction of intents treated as known, in `(0, 1]`.
    labeled_ratio : float
        Fraction of each known intent's samples that keep their label, in `(0, 1]`.
    seed : int
        Seed for choosing known intents and labeled samples.
    """

    known_fraction: float = attr.field(default=0.25, converter=float, validator=_fraction)
    labeled_ratio: float = attr.field(default=0.1, converter=float, validator=_fraction)
    seed: int = attr.field(default=0, converter=int, validator=attr.validators.ge(0))


def known_intent_count(known_fraction: float, num_intents: int) -> int:
    """The number of known intents `K = floor(known_fraction * G)`.

    Raises
    ------
    InvalidSplitSpecError
        If the product is below one.
    """
    # Absorbs representation error such as 0.29 * 100 == 28.999999999999996.
    count = math.floor(known_fraction * num_intents + 1e-9)
    if count < 1:
        raise InvalidSplitSpecError(
            f"known_fraction={known_fraction} leaves no known intent out of {num_intents}; K must be at least 1."
        )
    return count


@attr.frozen(slots=True, eq=False)
class SplitResult:
    """A training corpus divided into a labeled subset and an unlabeled pool.

    All labels are expressed in the relabeled id space, where known intents occupy `[0, K)`.
    The ground truth of unlabeled samples is kept out of the samples themselves and is only
    reachable through [`ground_truth`][dcsc.data.split.SplitResult.ground_truth], which training code never calls.
    """

    labeled: tuple[Sample, ...] = attr.field(converter=tuple)
    """Samples of known intents that keep their (relabeled) label."""

    unlabeled: tuple[Sample, ...] = attr.field(converter=tuple)
    """Every other training sample, with its label removed."""

    known_intents: int
    """The number of known intents `K`."""

    num_intents: int
    """The total number of intents `G`."""

    intent_relabeling: dict[int, int]
    """Maps original intent ids to contiguous ids, known intents first."""

    _hidden_truth: tuple[int, ...] = attr.field(alias="hidden_truth", converter=tuple)
    """Relabeled ground truth of the unlabeled pool, `-1` where none existed."""

    def training_samples(self) -> list[Sample]:
        """The full training set: the labeled subset followed by the unlabeled pool."""
        return [*self.labeled, *self.unlabeled]

    def ground_truth(self) -> IntArray:
        """Relabeled ground truth aligned with [`training_samples`][dcsc.data.split.SplitResult.training_samples].

        This is for evaluation only.
        """
        labeled = [t.cast(int, s.label) for s in self.labeled]
        return np.array([*labeled, *self._hidden_truth], dtype=np.int64)

    def relabel(self, corpus: Corpus) -> Corpus:
        """Map another corpus (validation or test) into this split's intent id space."""
        if corpus.num_intents != self.num_intents:
            raise MalformedCorpusError(
                f"Corpus has {corpus.num_intents} intents but the split was made for {self.num_intents}."
            )
        return Corpus(
            [s if s.label is None else s.with_label(self.intent_relabeling[s.label]) for s in corpus],
            num_intents=self.num_intents,
        )


def _round_half_up(value: float) -> int:
    return math.floor(value + 0.5)


def split_corpus(corpus: Corpus, spec: SplitSpec) -> SplitResult:
    """Choose known intents and their labeled subset.

    Parameters
    ----------
    corpus : Corpus
        The training corpus. Samples without a label always land in the unlabeled pool.
    spec : SplitSpec
        The split specification.

    Returns
    -------
    SplitResult
        The labeled subset, the unlabeled pool and the intent relabeling.

    Raises
    ------
    InvalidSplitSpecError
        If `known_fraction * G < 1`.
    MalformedCorpusError
        If the corpus has fewer than two intents or some intent has no samples.
    """
    num_intents = corpus.num_intents
    if num_intents < 2:
        raise MalformedCorpusError(f"Splitting needs at least 2 intents, the corpus has {num_intents}.")

    known_count = known_intent_count(spec.known_fraction, num_intents)

    counts = corpus.intent_counts()
    if empty := [int(i) for i in np.flatnonzero(counts == 0)]:
        raise MalformedCorpusError(f"Intents {empty} have no samples.")

    rng = np.random.default_rng(spec.seed)
    known = np.sort(rng.choice(num_intents, size=known_count, replace=False))
    unknown = np.setdiff1d(np.arange(num_intents), known)
    relabeling = {int(original): new for new, original in enumerate([*known, *unknown])}

    labels = corpus.labels()
    is_labeled = np.zeros(len(corpus), dtype=bool)
    for intent in known:
        members = np.flatnonzero(labels == intent)
        take = max(1, _round_half_up(spec.labeled_ratio * members.size))
        is_labeled[rng.choice(members, size=take, replace=False)] = True

    labeled: list[Sample] = []
    unlabeled: list[Sample] = []
    hidden: list[int] = []
    for sample, keep in zip(corpus.samples, is_labeled):
        if keep:
            labeled.append(sample.with_label(relabeling[t.cast(int, sample.label)]))
        else:
            hidden.append(-1 if sample.label is None else relabeling[sample.label])
            unlabeled.append(sample.with_label(None))

    logger.info(
        f"Split corpus of {len(corpus)} samples: K={known_count} of G={num_intents} intents known, "
        f"{len(labeled)} labeled, {len(unlabeled)} unlabeled."
    )

    return SplitResult(
        labeled=labeled,
        unlabeled=unlabeled,
        known_intents=known_count,
        num_intents=num_intents,
        intent_relabeling=relabeling,
        hidden_truth=hidden,
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
