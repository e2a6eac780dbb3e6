from __future__ import annotations

import logging
import typing as t

import attr
import numpy as np

from dcsc.errors import ConfigError, InsufficientDataError

if t.TYPE_CHECKING:
    from dcsc.internal.types import FloatArray, IntArray

__all__ = ("KMeansResult", "kmeans_pp", "squared_distances")

logger = logging.getLogger(__name__)


@attr.frozen(slots=True, eq=False)
class KMeansResult:
    """Outcome of a K-Means++ run."""

    centers: FloatArray
    """The `G x D` cluster centers."""

    labels: IntArray
    """Cluster index of every point."""

    inertia: float
    """Sum of squared distances of points to their assigned center."""

    inertia_history: tuple[float, ...]
    """Inertia after every assignment step, non-increasing."""

    iterations: int
    """Number of Lloyd iterations run."""

    converged: bool
    """Whether the assignments reached a fixpoint before the iteration limit."""


def squared_distances(points: FloatArray, centers: FloatArray) -> FloatArray:
    """Pairwise squared Euclidean distances, `M x G`, clipped at zero."""
    distances = (
        np.einsum("ij,ij->i", points, points)[:, None]
        - 2.0 * points @ centers.T
        + np.einsum("ij,ij->i", centers, centers)[None, :]
    )
    return np.maximum(distances, 0.0)


def _seed(points: FloatArray, num_clusters: int, rng: np.random.Generator) -> FloatArray:
    """D^2-weighted seeding."""
    count = points.shape[0]
    chosen = [int(rng.integers(count))]
    closest = squared_distances(points, points[chosen]).min(axis=1)

    for _ in range(1, num_clusters):
        total = closest.sum()
        if total > 0.0:
            index = int(rng.choice(count, p=closest / total))
        else:
            # Every point coincides with a chosen center.
            index = int(rng.integers(count))
        chosen.append(index)
        closest = np.minimum(closest, squared_distances(points, points[[index]])[:, 0])

    return points[chosen].copy()


def _lloyd(
    points: FloatArray, centers: FloatArray, max_iters: int
) -> tuple[FloatArray, IntArray, list[float], int, bool]:
    num_clusters = centers.shape[0]
    labels = np.full(points.shape[0], -1, dtype=np.int64)
    history: list[float] = []
    converged = False
    iteration = 0

    for iteration in range(1, max_iters + 1):
        distances = squared_distances(points, centers)
        new_labels = np.argmin(distances, axis=1).astype(np.int64)
        point_cost = distances[np.arange(points.shape[0]), new_labels]
        history.append(float(point_cost.sum()))

        if np.array_equal(new_labels, labels):
            converged = True
            break
        labels = new_labels

        counts = np.bincount(labels, minlength=num_clusters)
        sums = np.zeros_like(centers)
        np.add.at(sums, labels, points)
        nonempty = counts > 0
        centers = centers.copy()
        centers[nonempty] = sums[nonempty] / counts[nonempty, None]

        if empty := np.flatnonzero(~nonempty).tolist():
            logger.warning(f"K-Means produced {len(empty)} empty cluster(s), re-seeding from the farthest points.")
            # Farthest points first; each empty cluster takes a different point.
            far_order = np.argsort(-point_cost, kind="stable")
            for cluster, point in zip(empty, far_order):
                centers[cluster] = points[point]

    return centers, labels, history, iteration, converged


def kmeans_pp(
    representations: FloatArray,
    num_clusters: int,
    seed: int | np.random.Generator = 0,
    max_lloyd_iters: int = 300,
    *,
    n_init: int = 1,
) -> KMeansResult:
    """K-Means with K-Means++ seeding.

    Parameters
    ----------
    representations : FloatArray
        The `M x D` points.
    num_clusters : int
        The number of clusters `G`.
    seed : int | np.random.Generator
        Seed or generator for the seeding.
    max_lloyd_iters : int
        Upper bound on Lloyd iterations per run.
    n_init : int
        Number of independently seeded runs; the one with the lowest inertia is kept.

    Returns
    -------
    KMeansResult
        Centers, labels and convergence details of the best run.

    Raises
    ------
    InsufficientDataError
        If there are fewer points than clusters.
    """
    points = np.asarray(representations, dtype=np.float64)
    if num_clusters < 1 or max_lloyd_iters < 1 or n_init < 1:
        raise ConfigError("num_clusters, max_lloyd_iters and n_init must all be positive.")
    if points.ndim != 2 or points.shape[0] < num_clusters:
        raise InsufficientDataError(int(points.shape[0]) if points.ndim == 2 else 0, num_clusters)

    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)

    best: KMeansResult | None = None
    for _ in range(n_init):
        centers, labels, history, iterations, converged = _lloyd(
            points, _seed(points, num_clusters, rng), max_lloyd_iters
        )
        result = KMeansResult(
            centers=centers,
            labels=labels,
            inertia=history[-1],
            inertia_history=tuple(history),
            iterations=iterations,
            converged=converged,
        )
        if best is None or result.inertia < best.inertia:
            best = result

    assert best is not None
    logger.debug(f"K-Means++ finished: inertia={best.inertia:.6g} after {best.iterations} iterations.")
    return best

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
