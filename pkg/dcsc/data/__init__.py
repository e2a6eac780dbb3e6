"""Corpus representation, the known-intent split protocol and batch scheduling."""

from dcsc.data.corpus import Corpus, Sample
from dcsc.data.io import load_corpus, read_samples, save_corpus
from dcsc.data.schedule import BatchSchedule
from dcsc.data.split import SplitResult, SplitSpec, known_intent_count, split_corpus

__all__ = (
    "Sample",
    "Corpus",
    "SplitSpec",
    "SplitResult",
    "split_corpus",
    "known_intent_count",
    "BatchSchedule",
    "load_corpus",
    "save_corpus",
    "read_samples",
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
