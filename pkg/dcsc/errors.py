from __future__ import annotations

import typing as t

__all__ = (
    "DCSCError",
    "ConfigError",
    "InvalidSplitSpecError",
    "DataMismatchError",
    "MalformedCorpusError",
    "MalformedSampleError",
    "NumericOverflowError",
    "MissingCacheError",
    "InvalidLabelError",
    "InvalidTemperatureError",
    "InvalidAssignmentError",
    "ShapeMismatchError",
    "BatchMismatchError",
    "InsufficientDataError",
    "DegenerateVectorError",
    "TrainingDivergedError",
    "CheckpointError",
    "SweepFailedError",
)


class DCSCError(Exception):
    """Base exception for all dcsc errors."""


class ConfigError(DCSCError, ValueError):
    """A configuration value is missing, of the wrong type or out of range."""


class InvalidSplitSpecError(ConfigError):
    """The split specification cannot produce at least one known intent."""


class DataMismatchError(ConfigError):
    """The corpora of a re-run differ from the ones recorded in its manifest.

    Attributes
    ----------
    roles : list[str]
        The corpus roles (`train`, `validation`, `test`) whose fingerprints differ.
    """

    def __init__(self, roles: list[str], *args: t.Any) -> None:
        self.roles = roles
        super().__init__(*args or (f"Corpus content changed since the manifest was written: {', '.join(roles)}.",))


class MalformedCorpusError(DCSCError, ValueError):
    """A corpus violates its invariants or could not be parsed.

    Attributes
    ----------
    line : int | None
        The 1-based line of the offending record, if the corpus was read from a file.
    """

    def __init__(self, *args: t.Any, line: int | None = None) -> None:
        self.line = line
        super().__init__(*args)


class MalformedSampleError(DCSCError, ValueError):
    """A single sample has invalid features, such as an empty token sequence."""


class NumericOverflowError(DCSCError, ArithmeticError):
    """A non-finite value appeared during a numeric computation.

    Attributes
    ----------
    layer : str
        Name of the layer or step that produced the non-finite value.
    """

    def __init__(self, layer: str, *args: t.Any) -> None:
        self.layer = layer
        super().__init__(*args)


class MissingCacheError(DCSCError, RuntimeError):
    """A backward pass was requested for views produced without a recorded forward pass."""


class InvalidLabelError(DCSCError, ValueError):
    """A label lies outside of the classifier's range.

    Attributes
    ----------
    label : int
        The offending label.
    num_classes : int
        The number of classes the classifier supports.
    """

    def __init__(self, label: int, num_classes: int, *args: t.Any) -> None:
        self.label = label
        self.num_classes = num_classes
        super().__init__(*args)


class InvalidTemperatureError(DCSCError, ValueError):
    """The contrastive temperature is not strictly positive.

    Attributes
    ----------
    tau : float
        The rejected temperature.
    """

    def __init__(self, tau: float, *args: t.Any) -> None:
        self.tau = tau
        super().__init__(*args)


class InvalidAssignmentError(DCSCError, ValueError):
    """A soft assignment row is not a probability distribution."""


class ShapeMismatchError(DCSCError, ValueError):
    """Two operands do not have compatible shapes.

    Attributes
    ----------
    expected : tuple[int, ...]
        The shape that was expected.
    actual : tuple[int, ...]
        The shape that was received.
    """

    def __init__(self, expected: tuple[int, ...], actual: tuple[int, ...], *args: t.Any) -> None:
        self.expected = expected
        self.actual = actual
        super().__init__(*args or (f"Expected shape {expected}, got {actual}.",))


class BatchMismatchError(DCSCError, RuntimeError):
    """Loss terms computed on different batches were composed together."""


class InsufficientDataError(DCSCError, ValueError):
    """Fewer samples are available than the operation requires.

    Attributes
    ----------
    available : int
        How many samples were provided.
    required : int
        How many samples are needed.
    """

    def __init__(self, available: int, required: int, *args: t.Any) -> None:
        self.available = available
        self.required = required
        super().__init__(*args or (f"Need at least {required} samples, got {available}.",))


class DegenerateVectorError(DCSCError, ValueError):
    """A vector with zero norm was passed where a direction is needed.

    Attributes
    ----------
    index : int
        Row index of the degenerate vector.
    """

    def __init__(self, index: int, *args: t.Any) -> None:
        self.index = index
        super().__init__(*args or (f"Row {index} has zero norm.",))


class TrainingDivergedError(DCSCError, ArithmeticError):
    """A loss became non-finite during training.

    Attributes
    ----------
    stage : str
        The training stage that diverged.
    epoch : int
        The epoch in which the divergence happened.
    step : int
        The global step within the stage.
    term : str
        The name of the loss term that became non-finite.
    """

    def __init__(self, stage: str, epoch: int, step: int, term: str, *args: t.Any) -> None:
        self.stage = stage
        self.epoch = epoch
        self.step = step
        self.term = term
        super().__init__(
            *args or (f"Loss term '{term}' became non-finite in stage '{stage}' (epoch {epoch}, step {step}).",)
        )


class CheckpointError(DCSCError):
    """A checkpoint could not be written, read, or is incompatible with the current setup."""


class SweepFailedError(DCSCError):
    """One or more cells of a sweep failed.

    Attributes
    ----------
    failed_cells : list[str]
        Identifiers of the cells that failed.
    """

    def __init__(self, failed_cells: list[str], *args: t.Any) -> None:
        self.failed_cells = failed_cells
        super().__init__(*args or (f"{len(failed_cells)} sweep cell(s) failed: {', '.join(failed_cells)}",))

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
