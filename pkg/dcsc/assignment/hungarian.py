from __future__ import annotations

import collections
import typing as t

import attr
import numpy as np

from dcsc.errors import NumericOverflowError, ShapeMismatchError

if t.TYPE_CHECKING:
    import numpy.typing as npt

    from dcsc.internal.types import FloatArray, IntArray

__all__ = ("Matching", "hungarian")


@attr.frozen(slots=True, eq=False)
class Matching:
    """A minimum-cost injective map from rows to columns."""

    columns: IntArray
    """`columns[i]` is the column assigned to row `i`."""

    total_cost: float
    """Sum of the costs of the chosen cells."""

    def as_dict(self) -> dict[int, int]:
        """The matching as a `row -> column` mapping."""
        return {row: int(col) for row, col in enumerate(self.columns)}


def _solve_square(cost: FloatArray) -> tuple[IntArray, FloatArray, FloatArray]:
    """Shortest augmenting path Hungarian algorithm on a square matrix.

    Returns the row -> column assignment together with row and column potentials `u`, `v`
    such that `cost[i, j] - u[i] - v[j] >= 0` everywhere, with equality on the assignment.
    """
    n = cost.shape[0]
    # 1-based bookkeeping; index 0 is a virtual column holding the row being inserted.
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    owner = np.zeros(n + 1, dtype=np.int64)
    way = np.zeros(n + 1, dtype=np.int64)

    for row in range(1, n + 1):
        owner[0] = row
        col = 0
        min_slack = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)

        while True:
            used[col] = True
            current_row = owner[col]
            free = ~used[1:]
            reduced = cost[current_row - 1] - u[current_row] - v[1:]

            improved = free & (reduced < min_slack[1:])
            min_slack[1:][improved] = reduced[improved]
            way[1:][improved] = col

            candidates = np.where(free, min_slack[1:], np.inf)
            next_col = int(np.argmin(candidates)) + 1
            delta = candidates[next_col - 1]

            u[owner[used]] += delta
            v[used] -= delta
            min_slack[~used] -= delta

            col = next_col
            if owner[col] == 0:
                break

        while col != 0:
            previous = way[col]
            owner[col] = owner[previous]
            col = previous

    assignment = np.empty(n, dtype=np.int64)
    assignment[owner[1:] - 1] = np.arange(n)
    return assignment, u[1:], v[1:]


def _lexicographic_refine(tight: npt.NDArray[np.bool_], match_row: IntArray, num_rows: int) -> IntArray:
    """The lexicographically smallest perfect matching of the tight graph, compared over the first `num_rows` rows."""
    size = tight.shape[0]
    match_row = match_row.copy()
    match_col = np.empty(size, dtype=np.int64)
    match_col[match_row] = np.arange(size)

    for row in range(num_rows):
        for target in np.flatnonzero(tight[row, : match_row[row]]):
            freed = int(match_row[row])
            displaced = int(match_col[target])
            if displaced < row:
                continue

            # Find an alternating path that lets `displaced` move out of `target`, ending at `freed`.
            parent: dict[int, int] = {}
            queue = collections.deque([displaced])
            visited_rows = {displaced}
            found = -1
            while queue and found < 0:
                current = queue.popleft()
                for col in np.flatnonzero(tight[current]):
                    col = int(col)
                    if col == target or col in parent or match_col[col] < row:
                        continue
                    parent[col] = current
                    if col == freed:
                        found = col
                        break
                    next_row = int(match_col[col])
                    if next_row not in visited_rows:
                        visited_rows.add(next_row)
                        queue.append(next_row)

            if found < 0:
                continue

            col = found
            while True:
                moving_row = parent[col]
                previous_col = int(match_row[moving_row])
                match_row[moving_row] = col
                match_col[col] = moving_row
                if moving_row == displaced:
                    break
                col = previous_col

            match_row[row] = target
            match_col[target] = row
            break

    return match_row


def hungarian(cost: FloatArray | t.Sequence[t.Sequence[float]]) -> Matching:
    """Minimum-cost assignment of every row to a distinct column.

    Among equally optimal assignments, the lexicographically smallest vector of columns is returned.

    Parameters
    ----------
    cost : FloatArray
        An `R x S` cost matrix with `R <= S`.

    Returns
    -------
    Matching
        The optimal matching and its total cost.

    Raises
    ------
    ShapeMismatchError
        If there are more rows than columns.
    NumericOverflowError
        If the costs are not finite.
    """
    matrix = np.asarray(cost, dtype=np.float64)
    if matrix.ndim != 2:
        raise ShapeMismatchError((-1, -1), tuple(matrix.shape))

    rows, cols = matrix.shape
    if rows > cols:
        raise ShapeMismatchError(
            (cols, cols), (rows, cols), f"Cannot match {rows} rows into {cols} columns; pad the matrix first."
        )
    if rows == 0:
        return Matching(columns=np.zeros(0, dtype=np.int64), total_cost=0.0)
    if not np.all(np.isfinite(matrix)):
        raise NumericOverflowError("hungarian", "Assignment costs must be finite.")

    # Dummy zero-cost rows make the problem square without changing the optimum of the real rows.
    square = np.zeros((cols, cols))
    square[:rows] = matrix

    assignment, u, v = _solve_square(square)

    scale = max(1.0, float(np.abs(matrix).max()))
    tight = np.abs(square - u[:, None] - v[None, :]) <= 1e-9 * scale
    tight[np.arange(cols), assignment] = True
    assignment = _lexicographic_refine(tight, assignment, rows)

    columns = assignment[:rows].copy()
    return Matching(columns=columns, total_cost=float(matrix[np.arange(rows), columns].sum()))

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
