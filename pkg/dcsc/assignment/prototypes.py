from __future__ import annotations

import typing as t

import numpy as np
import torch
from torch import nn

from dcsc.assignment.hungarian import hungarian
from dcsc.errors import DegenerateVectorError, ShapeMismatchError

if t.TYPE_CHECKING:
    from dcsc.assignment.hungarian import Matching
    from dcsc.internal.types import FloatArray

__all__ = ("PrototypeBank", "align_and_extract", "cosine_cost")


class PrototypeBank(nn.Module):
    """The `G x D` cluster prototypes of the clustering stage.

    The first `known_count` rows are the centers aligned with the known intents; they double as the
    classifier of the supervised steps. [`classifier`][dcsc.assignment.prototypes.PrototypeBank.classifier]
    is a view into the same storage, never a copy.

    Parameters
    ----------
    prototypes : torch.Tensor | FloatArray
        The initial `G x D` prototypes, known-intent centers first.
    known_count : int
        The number of known intents `K`.
    matching : Matching | None
        The classifier-to-center matching the bank was built from, if any.
    """

    def __init__(
        self, prototypes: torch.Tensor | FloatArray, known_count: int, *, matching: Matching | None = None
    ) -> None:
        super().__init__()
        if isinstance(prototypes, torch.Tensor):
            data = prototypes.detach().clone().to(torch.float64)
        else:
            data = torch.from_numpy(np.array(prototypes, dtype=np.float64))
        if data.ndim != 2 or not 0 < known_count <= data.shape[0]:
            raise ShapeMismatchError((known_count, -1), tuple(data.shape))

        self.weights = nn.Parameter(data)
        self.known_count = known_count
        self.matching = matching

    @property
    def num_clusters(self) -> int:
        """`G`."""
        return int(self.weights.shape[0])

    @property
    def classifier(self) -> torch.Tensor:
        """Rows `[0, K)`, sharing storage with the prototypes."""
        return self.weights[: self.known_count]

    def shares_storage(self, tensor: torch.Tensor) -> bool:
        """Whether `tensor` lives in the same storage as the prototypes."""
        return tensor.untyped_storage().data_ptr() == self.weights.untyped_storage().data_ptr()

    @torch.no_grad()
    def normalize_(self) -> None:
        """Rescale every prototype to unit length in place."""
        self.weights.div_(self.weights.norm(dim=1, keepdim=True).clamp(min=1e-12))

    def numpy(self) -> FloatArray:
        return self.weights.detach().numpy().copy()


def _unit_rows(matrix: FloatArray, name: str) -> FloatArray:
    norms = np.linalg.norm(matrix, axis=1)
    if (degenerate := np.flatnonzero(norms == 0.0)).size:
        index = int(degenerate[0])
        raise DegenerateVectorError(index, f"Row {index} of {name} has zero norm.")
    return matrix / norms[:, None]


def cosine_cost(weights: FloatArray, centers: FloatArray) -> FloatArray:
    """`1 - cosine` between every classifier row and every center.

    Raises
    ------
    DegenerateVectorError
        If any row of either matrix has zero norm.
    """
    return 1.0 - _unit_rows(weights, "the classifier") @ _unit_rows(centers, "the centers").T


def align_and_extract(
    weights: FloatArray | torch.Tensor, raw_centers: FloatArray, *, normalize: bool = False
) -> PrototypeBank:
    """Put the centers most likely to be the known intents first.

    Every classifier row is matched to a distinct center by minimum total cosine distance. Matched
    centers take indices `[0, K)` in the order of the classifier rows, the remaining centers follow
    in their original order.

    Parameters
    ----------
    weights : FloatArray | torch.Tensor
        The `K x D` classifier weights learned during warm-up.
    raw_centers : FloatArray
        The `G x D` K-Means++ centers.
    normalize : bool
        Whether to rescale the resulting prototypes to unit length.

    Returns
    -------
    PrototypeBank
        The re-sorted prototypes.

    Raises
    ------
    ShapeMismatchError
        If `K > G` or the dimensions differ.
    DegenerateVectorError
        If a classifier row or center has zero norm.
    """
    w = weights.detach().numpy() if isinstance(weights, torch.Tensor) else np.asarray(weights, dtype=np.float64)
    centers = np.asarray(raw_centers, dtype=np.float64)
    if w.ndim != 2 or centers.ndim != 2 or w.shape[1] != centers.shape[1] or w.shape[0] > centers.shape[0]:
        raise ShapeMismatchError((centers.shape[0], centers.shape[1]), tuple(w.shape))

    matching = hungarian(cosine_cost(w, centers))
    matched = matching.columns.tolist()
    taken = set(matched)
    rest = [index for index in range(centers.shape[0]) if index not in taken]
    ordered = centers[matched + rest]

    bank = PrototypeBank(ordered, w.shape[0], matching=matching)
    if normalize:
        bank.normalize_()
    return bank

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
