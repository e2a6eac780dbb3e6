from __future__ import annotations

import json
import pathlib
import typing as t

import attr

from dcsc.errors import ConfigError
from dcsc.internal.version import CURRENT_VERSION
from dcsc.metrics import MetricReport

__all__ = ("RunManifest", "write_json")


def write_json(path: pathlib.Path, data: t.Any) -> None:
    """Write `data` as indented JSON with sorted keys and a trailing newline."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _report(value: t.Any) -> MetricReport | None:
    if value is None or isinstance(value, MetricReport):
        return value
    return MetricReport.from_dict(value)


@attr.define(slots=True, kw_only=True)
class RunManifest:
    """Record of a single run, sufficient to reproduce it.

    The resolved configuration carries every seed; the fingerprints pin the data.
    """

    config: dict[str, t.Any]
    """The fully resolved run configuration."""

    seed: int
    """The root seed of the run."""

    fingerprints: dict[str, str]
    """Content hash of every corpus used, by role (`train`, `validation`, `test`)."""

    known_intents: int
    num_intents: int

    stage_seconds: dict[str, float] = attr.field(factory=dict)
    """Wall-clock duration of every stage."""

    losses: dict[str, dict[str, list[float]]] = attr.field(factory=dict)
    """Per-epoch mean of every loss term, by stage."""

    known_accuracy: list[float] = attr.field(factory=list)
    """Classifier accuracy on the labeled subset after every epoch."""

    metrics: MetricReport | None = attr.field(default=None, converter=_report)
    """Final test metrics of K-Means++ on the trained representations."""

    head_metrics: MetricReport | None = attr.field(default=None, converter=_report)
    """Final test metrics of the cluster head argmax."""

    raw_baseline: MetricReport | None = attr.field(default=None, converter=_report)
    """K-Means++ on the raw input features of the test set."""

    init_baseline: MetricReport | None = attr.field(default=None, converter=_report)
    """K-Means++ on the representations of the untrained encoder."""

    aborted: bool = False
    version: str = str(CURRENT_VERSION)

    def to_dict(self) -> dict[str, t.Any]:
        return attr.asdict(self)

    def write(self, path: str | pathlib.Path) -> None:
        write_json(pathlib.Path(path), self.to_dict())

    @classmethod
    def read(cls, path: str | pathlib.Path) -> RunManifest:
        """Load a manifest written by [`write`][dcsc.manifest.RunManifest.write].

        Raises
        ------
        ConfigError
            If the file cannot be read or is not a manifest.
        """
        try:
            data = json.loads(pathlib.Path(path).read_text(encoding="utf-8"))
            return cls(**data)
        except (OSError, json.JSONDecodeError, TypeError, KeyError) as exc:
            raise ConfigError(f"Cannot read run manifest '{path}': {exc}") from exc

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
