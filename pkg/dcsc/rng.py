from __future__ import annotations

import zlib

import attr
import numpy as np
import torch

__all__ = ("SeedStreams",)


@attr.frozen(slots=True)
class SeedStreams:
    """Derives independent, reproducible random streams from a single root seed.

    Every component asks for its stream by name, so perturbing one component's randomness
    (e.g. the dropout draws) leaves all the others untouched.

    Parameters
    ----------
    root : int
        The root seed of the run.
    """

    root: int = attr.field(validator=attr.validators.ge(0))

    def sequence(self, name: str) -> np.random.SeedSequence:
        """The seed sequence of the substream called `name`."""
        return np.random.SeedSequence(entropy=self.root, spawn_key=(zlib.crc32(name.encode()),))

    def numpy(self, name: str) -> np.random.Generator:
        """A fresh numpy generator for the substream called `name`."""
        return np.random.default_rng(self.sequence(name))

    def seed(self, name: str) -> int:
        """A 63-bit integer seed for the substream called `name`."""
        return int(self.sequence(name).generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))

    def torch(self, name: str) -> torch.Generator:
        """A fresh CPU torch generator seeded from the substream called `name`."""
        return torch.Generator().manual_seed(self.seed(name))

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
