"""Grids of runs over known-intent fractions and seeds, aggregated into one table."""

from __future__ import annotations

import concurrent.futures
import logging
import multiprocessing
import pathlib
import typing as t

import attr
import torch

from dcsc.config import RunConfig, SweepConfig, apply_overrides
from dcsc.errors import DCSCError
from dcsc.metrics import MetricReport
from dcsc.pipeline import run_experiment

__all__ = ("SweepCell", "CellOutcome", "SweepResult", "run_sweep", "format_table")

logger = logging.getLogger(__name__)

ABLATION_MARK: t.Final[str] = "DCSC\N{DAGGER}"


@attr.frozen(slots=True)
class SweepCell:
    """One run of a sweep."""

    known_fraction: float
    seed: int
    ablation: bool = False

    @property
    def method(self) -> str:
        return ABLATION_MARK if self.ablation else "DCSC"

    @property
    def name(self) -> str:
        return f"kf{self.known_fraction:.2f}-seed{self.seed}-{'ablation' if self.ablation else 'full'}"


@attr.frozen(slots=True)
class CellOutcome:
    """Result of one cell; exactly one of `metrics` and `error` is set."""

    cell: SweepCell
    metrics: MetricReport | None = None
    raw_baseline: MetricReport | None = None
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@attr.frozen(slots=True)
class SweepResult:
    outcomes: tuple[CellOutcome, ...]

    @property
    def failed_cells(self) -> list[str]:
        return [o.cell.name for o in self.outcomes if o.failed]

    def rows(self) -> list[tuple[float, str, MetricReport, MetricReport]]:
        """Mean metrics and mean raw-feature baseline per `(known fraction, method)`, in table order.

        Groups whose cells all failed are left out.
        """
        groups: dict[tuple[float, bool], list[CellOutcome]] = {}
        for outcome in self.outcomes:
            if outcome.metrics is not None:
                key = (outcome.cell.known_fraction, outcome.cell.ablation)
                groups.setdefault(key, []).append(outcome)

        rows: list[tuple[float, str, MetricReport, MetricReport]] = []
        for (fraction, ablation), outcomes in sorted(groups.items()):
            rows.append(
                (
                    fraction,
                    ABLATION_MARK if ablation else "DCSC",
                    MetricReport.mean([t.cast(MetricReport, o.metrics) for o in outcomes]),
                    MetricReport.mean([t.cast(MetricReport, o.raw_baseline) for o in outcomes]),
                )
            )
        return rows


def _run_cell(mapping: dict[str, t.Any], cell: SweepCell, out: str, threads: int | None = None) -> CellOutcome:
    if threads is not None:
        torch.set_num_threads(threads)

    overrides = {
        "split.known_fraction": cell.known_fraction,
        "split.seed": cell.seed,
        "train.seed": cell.seed,
        "train.ablation_no_sup_cluster": cell.ablation,
    }
    try:
        config = RunConfig.from_mapping(apply_overrides(mapping, overrides))
        result = run_experiment(config, out=pathlib.Path(out) / cell.name)
    except DCSCError as exc:
        logger.error(f"Sweep cell {cell.name} failed: {type(exc).__name__}: {exc}")
        return CellOutcome(cell=cell, error=f"{type(exc).__name__}: {exc}")
    return CellOutcome(cell=cell, metrics=result.evaluation.metrics, raw_baseline=result.manifest.raw_baseline)


def run_sweep(
    mapping: t.Mapping[str, t.Any],
    sweep: SweepConfig,
    *,
    out: str | pathlib.Path,
    workers: int = 1,
    threads: int | None = None,
) -> SweepResult:
    """Run every cell of the grid.

    Cells may run in parallel worker processes; every cell is deterministic on its own and the
    outcomes are always returned in grid order.

    Parameters
    ----------
    mapping : t.Mapping[str, t.Any]
        The base configuration, as parsed from the configuration file.
    sweep : SweepConfig
        The grid.
    out : str | pathlib.Path
        Directory that receives one sub-directory per cell.
    workers : int
        Number of worker processes.
    threads : int | None
        Torch threads of every cell, set inside each worker. `None` keeps torch's default.
    """
    cells = [
        SweepCell(known_fraction=fraction, seed=seed, ablation=ablation)
        for fraction in sweep.known_fractions
        for ablation in ((False, True) if sweep.ablation else (False,))
        for seed in sweep.seeds
    ]
    base = dict(mapping)
    logger.info(f"Running {len(cells)} sweep cell(s) on {workers} worker(s), {threads or 'default'} thread(s) each.")

    if workers <= 1:
        outcomes = [_run_cell(base, cell, str(out), threads) for cell in cells]
    else:
        context = multiprocessing.get_context("spawn")
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers, mp_context=context) as pool:
            count = len(cells)
            outcomes = list(pool.map(_run_cell, [base] * count, cells, [str(out)] * count, [threads] * count))

    return SweepResult(outcomes=tuple(outcomes))


def format_table(result: SweepResult, *, baselines: bool = False) -> str:
    """A markdown table with one row per known fraction and method.

    With `baselines`, every fraction also gets a row for K-Means++ on the raw input features.
    """
    lines = [
        "| Known | Method | ACC | ARI | NMI |",
        "|---|---|---|---|---|",
    ]
    seen_baselines: set[float] = set()
    for fraction, method, metrics, raw in result.rows():
        if baselines and fraction not in seen_baselines:
            seen_baselines.add(fraction)
            lines.append(f"| {fraction:.0%} | K-Means++ (raw) | {raw.acc:.4f} | {raw.ari:.4f} | {raw.nmi:.4f} |")
        lines.append(f"| {fraction:.0%} | {method} | {metrics.acc:.4f} | {metrics.ari:.4f} | {metrics.nmi:.4f} |")
    return "\n".join(lines) + "\n"

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
