from __future__ import annotations

import typing as t

import numpy as np
import numpy.typing as npt

if t.TYPE_CHECKING:
    from dcsc.abc.hookable import Hookable, HookResult
    from dcsc.events import TrainingEvent


FloatArray: t.TypeAlias = npt.NDArray[np.float64]
IntArray: t.TypeAlias = npt.NDArray[np.int64]

Phase: t.TypeAlias = t.Literal["warmup", "cluster"]
BatchMode: t.TypeAlias = t.Literal["supervised", "unsupervised"]
Stage: t.TypeAlias = t.Literal["warmup", "cluster", "cluster_sup"]
Activation: t.TypeAlias = t.Literal["tanh", "relu", "identity"]
CenterLayout: t.TypeAlias = t.Literal["uniform", "equidistant"]

HookableT = t.TypeVar("HookableT", bound="Hookable")

HookT: t.TypeAlias = "t.Callable[[TrainingEvent], HookResult | None]"

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
