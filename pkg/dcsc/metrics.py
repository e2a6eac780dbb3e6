"""External clustering metrics: Hungarian-matched accuracy, ARI and NMI."""

from __future__ import annotations

import math
import typing as t

import attr
import numpy as np
from sklearn import metrics as sk_metrics  # pyright: ignore[reportMissingTypeStubs]

from dcsc.assignment.hungarian import hungarian
from dcsc.errors import InsufficientDataError, ShapeMismatchError

if t.TYPE_CHECKING:
    from dcsc.internal.types import IntArray

__all__ = ("ContingencyTable", "MetricReport", "clustering_accuracy", "ari", "nmi", "score")

Labels: t.TypeAlias = "IntArray | t.Sequence[int]"


def _pair(pred: Labels, true: Labels, minimum: int) -> tuple[IntArray, IntArray]:
    p = np.asarray(pred, dtype=np.int64).ravel()
    y = np.asarray(true, dtype=np.int64).ravel()
    if p.shape != y.shape:
        raise ShapeMismatchError(tuple(y.shape), tuple(p.shape), "Predicted and true labelings differ in length.")
    if p.size < minimum:
        raise InsufficientDataError(int(p.size), minimum)
    return p, y


@attr.frozen(slots=True, eq=False)
class ContingencyTable:
    """Co-occurrence counts of predicted clusters and true classes."""

    counts: IntArray
    """`P x T` matrix; `counts[i, j]` samples are in predicted cluster `i` and true class `j`."""

    n: int
    """Total number of samples."""

    @classmethod
    def from_labels(cls, pred: Labels, true: Labels) -> ContingencyTable:
        """Build the table from two labelings of equal length. Label values only need to be distinct ids."""
        p, y = _pair(pred, true, 1)
        _, p_index = np.unique(p, return_inverse=True)
        _, y_index = np.unique(y, return_inverse=True)
        counts = np.zeros((int(p_index.max()) + 1, int(y_index.max()) + 1), dtype=np.int64)
        np.add.at(counts, (p_index, y_index), 1)
        return cls(counts=counts, n=int(p.size))

    @property
    def shape(self) -> tuple[int, int]:
        return t.cast("tuple[int, int]", self.counts.shape)


def clustering_accuracy(pred: Labels, true: Labels) -> float:
    """Fraction of samples matched under the best one-to-one map from clusters to classes.

    Raises
    ------
    ShapeMismatchError
        If the labelings differ in length.
    InsufficientDataError
        If the labelings are empty.
    """
    table = ContingencyTable.from_labels(pred, true)
    size = max(table.shape)
    padded = np.zeros((size, size), dtype=np.float64)
    padded[: table.shape[0], : table.shape[1]] = table.counts

    matching = hungarian(-padded)
    return -matching.total_cost / table.n


def ari(pred: Labels, true: Labels) -> float:
    """Adjusted Rand Index of two labelings.

    Two labelings that group every pair of samples the same way score 1.

    Raises
    ------
    ShapeMismatchError
        If the labelings differ in length.
    InsufficientDataError
        If fewer than two samples are given.
    """
    p, y = _pair(pred, true, 2)
    return float(sk_metrics.adjusted_rand_score(y, p))  # pyright: ignore[reportUnknownMemberType]


def nmi(pred: Labels, true: Labels) -> float:
    """Mutual information normalized by the arithmetic mean of both entropies.

    Two labelings with zero entropy each score 1.

    Raises
    ------
    ShapeMismatchError
        If the labelings differ in length.
    InsufficientDataError
        If the labelings are empty.
    """
    p, y = _pair(pred, true, 1)
    if np.unique(p).size == 1 and np.unique(y).size == 1:
        return 1.0
    value: float = sk_metrics.normalized_mutual_info_score(  # pyright: ignore[reportUnknownMemberType]
        y, p, average_method="arithmetic"
    )
    return min(1.0, max(0.0, float(value)))


@attr.frozen(slots=True)
class MetricReport:
    """ACC, ARI and NMI of one clustering."""

    acc: float
    ari: float
    nmi: float

    def to_dict(self) -> dict[str, float]:
        return {"acc": self.acc, "ari": self.ari, "nmi": self.nmi}

    @classmethod
    def from_dict(cls, data: t.Mapping[str, t.Any]) -> MetricReport:
        return cls(acc=float(data["acc"]), ari=float(data["ari"]), nmi=float(data["nmi"]))

    def format(self) -> str:
        """Human readable, four decimal places."""
        return f"ACC {self.acc:.4f}  ARI {self.ari:.4f}  NMI {self.nmi:.4f}"

    @classmethod
    def mean(cls, reports: t.Sequence[MetricReport]) -> MetricReport:
        """Average several reports, e.g. over the seeds of a sweep cell."""
        if not reports:
            raise InsufficientDataError(0, 1, "Cannot average an empty list of reports.")
        return cls(
            acc=math.fsum(r.acc for r in reports) / len(reports),
            ari=math.fsum(r.ari for r in reports) / len(reports),
            nmi=math.fsum(r.nmi for r in reports) / len(reports),
        )


def score(pred: Labels, true: Labels) -> MetricReport:
    """All three metrics of a clustering.

    ARI needs two samples; a single sample scores ARI 1.
    """
    p, y = _pair(pred, true, 1)
    return MetricReport(
        acc=clustering_accuracy(p, y),
        ari=ari(p, y) if p.size >= 2 else 1.0,
        nmi=nmi(p, y),
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
