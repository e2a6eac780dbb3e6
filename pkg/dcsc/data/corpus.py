from __future__ import annotations

import hashlib
import typing as t

import attr
import numpy as np

from dcsc.errors import MalformedCorpusError, MalformedSampleError

if t.TYPE_CHECKING:
    import typing_extensions as te

    from dcsc.internal.types import FloatArray, IntArray

__all__ = ("Sample", "Corpus")


def _to_features(value: t.Any) -> FloatArray:
    try:
        features = np.asarray(value, dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise MalformedSampleError(f"Features must be numeric with one length per token, got {value!r:.60}: {e}") from e
    if features.ndim not in (1, 2):
        raise MalformedSampleError(f"Features must be a vector or a token sequence, got {features.ndim} dimensions.")
    if features.ndim == 2 and features.shape[0] == 0:
        raise MalformedSampleError("Token sequences must not be empty.")
    if features.shape[-1] == 0:
        raise MalformedSampleError("Feature vectors must not be empty.")
    if not np.all(np.isfinite(features)):
        raise MalformedSampleError("Feature values must be finite.")
    features.setflags(write=False)
    return features


def _check_label(instance: Sample, attribute: attr.Attribute[int | None], value: int | None) -> None:
    if value is not None and value < 0:
        raise MalformedSampleError(f"Sample '{instance.id}' has a negative label ({value}).")


@attr.frozen(slots=True, eq=False)
class Sample:
    """A single query to be clustered.

    Parameters
    ----------
    id : str
        An opaque identifier, unique within a corpus.
    features : FloatArray
        Either a `D_in` vector or a `T x D_in` token-feature sequence.
    label : int | None
        The intent index of the sample, or `None` if it is unlabeled.
    """

    id: str = attr.field(converter=str)
    features: FloatArray = attr.field(converter=_to_features)
    label: int | None = attr.field(default=None, validator=_check_label)

    @property
    def input_dim(self) -> int:
        """The feature dimension `D_in` of this sample."""
        return int(self.features.shape[-1])

    @property
    def is_sequence(self) -> bool:
        """Whether the features are a token sequence rather than a single vector."""
        return self.features.ndim == 2

    def with_label(self, label: int | None) -> te.Self:
        """Return a copy of this sample carrying a different label."""
        return attr.evolve(self, label=label)


def _check_num_intents(instance: Corpus, attribute: attr.Attribute[int], value: int) -> None:
    if value < 1:
        raise MalformedCorpusError(f"A corpus needs at least one intent, got {value}.")


@attr.frozen(slots=True, eq=False)
class Corpus:
    """An ordered collection of samples sharing one feature dimension.

    Parameters
    ----------
    samples : t.Sequence[Sample]
        The samples of the corpus.
    num_intents : int
        The total intent count `G`. Every labeled sample must have a label below it.
    """

    samples: tuple[Sample, ...] = attr.field(converter=tuple)
    num_intents: int = attr.field(validator=_check_num_intents)

    def __attrs_post_init__(self) -> None:
        dims = {sample.input_dim for sample in self.samples}
        if len(dims) > 1:
            raise MalformedCorpusError(f"Samples disagree on the feature dimension: {sorted(dims)}.")

        seen: set[str] = set()
        for sample in self.samples:
            if sample.id in seen:
                raise MalformedCorpusError(f"Duplicate sample id '{sample.id}'.")
            seen.add(sample.id)

            if sample.label is not None and sample.label >= self.num_intents:
                raise MalformedCorpusError(
                    f"Sample '{sample.id}' has label {sample.label}, "
                    f"but the corpus only has {self.num_intents} intents."
                )

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self) -> t.Iterator[Sample]:
        return iter(self.samples)

    @property
    def input_dim(self) -> int:
        """The shared feature dimension `D_in`, or 0 for an empty corpus."""
        return self.samples[0].input_dim if self.samples else 0

    @property
    def ids(self) -> list[str]:
        """The sample ids in corpus order."""
        return [sample.id for sample in self.samples]

    def labels(self) -> IntArray:
        """The labels in corpus order, with `-1` standing in for unlabeled samples."""
        return np.array([-1 if s.label is None else s.label for s in self.samples], dtype=np.int64)

    def intent_counts(self) -> IntArray:
        """How many labeled samples each intent has."""
        labels = self.labels()
        return np.bincount(labels[labels >= 0], minlength=self.num_intents).astype(np.int64)

    def fingerprint(self) -> str:
        """A content hash over ids, features and labels, stable across runs and platforms."""
        digest = hashlib.sha256()
        digest.update(str(self.num_intents).encode())
        for sample in self.samples:
            digest.update(sample.id.encode())
            digest.update(str(sample.features.shape).encode())
            digest.update(np.ascontiguousarray(sample.features, dtype="<f8").tobytes())
            digest.update(str(sample.label).encode())
        return digest.hexdigest()

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
