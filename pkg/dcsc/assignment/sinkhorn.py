from __future__ import annotations

import logging
import math
import typing as t

import attr
import numpy as np
from scipy.special import logsumexp

from dcsc.errors import ConfigError, NumericOverflowError

if t.TYPE_CHECKING:
    from dcsc.internal.types import FloatArray, IntArray

__all__ = ("SoftAssignment", "HardAssignment", "sinkhorn_assign", "harden", "DEFAULT_EPSILON", "DEFAULT_ITERATIONS")

logger = logging.getLogger(__name__)

DEFAULT_EPSILON: t.Final[float] = 0.05
DEFAULT_ITERATIONS: t.Final[int] = 3


@attr.frozen(slots=True, eq=False)
class SoftAssignment:
    """Batch-balanced soft cluster assignments; every row is a probability distribution."""

    probabilities: FloatArray
    """The `N x G` assignment matrix `A`."""

    iterations_used: int
    """How many normalization rounds were run."""

    epsilon: float
    """The entropic regularization strength."""

    underfilled: bool = False
    """Set when the batch has fewer rows than clusters, so not every cluster can be filled."""

    column_deviation: tuple[float, ...] = ()
    """Total-variation distance of the column marginals from uniform after every round."""

    @property
    def shape(self) -> tuple[int, int]:
        return t.cast("tuple[int, int]", self.probabilities.shape)


@attr.frozen(slots=True, eq=False)
class HardAssignment:
    """Hard cluster indices derived from a soft assignment."""

    labels: IntArray
    """The length-`N` vector of cluster indices."""


def _column_deviation(log_m: FloatArray) -> float:
    """Total-variation distance between the normalized column marginals and the uniform distribution."""
    columns = np.exp(logsumexp(log_m, axis=0) - logsumexp(log_m))
    return 0.5 * float(np.abs(columns - 1.0 / log_m.shape[1]).sum())


def sinkhorn_assign(
    logits: FloatArray | t.Sequence[t.Sequence[float]],
    epsilon: float = DEFAULT_EPSILON,
    n_iters: int = DEFAULT_ITERATIONS,
    *,
    tol: float | None = None,
) -> SoftAssignment:
    """Balanced soft assignment of `N` rows to `G` clusters by Sinkhorn-Knopp iterations.

    The kernel `exp(Q / epsilon)` is first normalized row-wise, then column normalization to the
    uniform marginal `1/G` and row normalization to `1/N` alternate for `n_iters` rounds. Finally
    every row is rescaled to sum to one. All arithmetic happens in the log domain.

    Parameters
    ----------
    logits : FloatArray
        The `N x G` logits `Q`.
    epsilon : float
        Entropic regularization; smaller values give sharper assignments.
    n_iters : int
        Maximum number of normalization rounds.
    tol : float | None
        If given, stop as soon as the column marginals are within this total-variation distance of uniform.

    Returns
    -------
    SoftAssignment
        The soft assignment.

    Raises
    ------
    ConfigError
        If `epsilon <= 0` or `n_iters < 1`.
    NumericOverflowError
        If the logits or the result are not finite.
    """
    if not epsilon > 0.0:
        raise ConfigError(f"epsilon must be positive, got {epsilon}.")
    if n_iters < 1:
        raise ConfigError(f"n_iters must be at least 1, got {n_iters}.")

    q = np.asarray(logits, dtype=np.float64)
    if q.ndim != 2 or q.shape[1] == 0:
        raise ConfigError(f"Expected an N x G logit matrix, got shape {q.shape}.")
    if not np.all(np.isfinite(q)):
        raise NumericOverflowError("sinkhorn", "Sinkhorn received non-finite logits.")

    n, g = q.shape
    underfilled = n < g
    if underfilled:
        logger.warning(f"Sinkhorn batch has {n} rows for {g} clusters; some clusters cannot be filled.")

    if n == 0:
        return SoftAssignment(probabilities=q.copy(), iterations_used=0, epsilon=epsilon, underfilled=underfilled)

    log_row, log_col = -math.log(n), -math.log(g)
    log_m = q / epsilon
    log_m = log_m - logsumexp(log_m, axis=1, keepdims=True) + log_row

    deviations: list[float] = []
    iterations = 0
    for iterations in range(1, n_iters + 1):
        log_m = log_m - logsumexp(log_m, axis=0, keepdims=True) + log_col
        log_m = log_m - logsumexp(log_m, axis=1, keepdims=True) + log_row
        deviations.append(_column_deviation(log_m))
        if tol is not None and deviations[-1] <= tol:
            break

    probabilities = np.exp(log_m - logsumexp(log_m, axis=1, keepdims=True))
    if not np.all(np.isfinite(probabilities)):
        raise NumericOverflowError("sinkhorn", "Sinkhorn produced non-finite assignments.")

    return SoftAssignment(
        probabilities=probabilities,
        iterations_used=iterations,
        epsilon=epsilon,
        underfilled=underfilled,
        column_deviation=tuple(deviations),
    )


def harden(soft: SoftAssignment | FloatArray) -> HardAssignment:
    """Row-wise argmax of a soft assignment; exact ties go to the lowest index."""
    probabilities = soft.probabilities if isinstance(soft, SoftAssignment) else np.asarray(soft, dtype=np.float64)
    return HardAssignment(labels=np.argmax(probabilities, axis=1).astype(np.int64))

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
