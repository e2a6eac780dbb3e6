import pathlib

import pytest
import torch

from dcsc import cli
from dcsc.config import SweepConfig
from dcsc.metrics import MetricReport
from dcsc.sweep import CellOutcome, SweepCell, SweepResult, format_table, run_sweep


def _report(value: float) -> MetricReport:
    return MetricReport(acc=value, ari=value, nmi=value)


def test_rows_average_over_seeds() -> None:
    result = SweepResult(
        outcomes=(
            CellOutcome(cell=SweepCell(0.5, 0), metrics=_report(0.5), raw_baseline=_report(0.25)),
            CellOutcome(cell=SweepCell(0.5, 1), metrics=_report(1.0), raw_baseline=_report(0.75)),
            CellOutcome(cell=SweepCell(0.5, 0, ablation=True), metrics=_report(0.25), raw_baseline=_report(0.25)),
            CellOutcome(cell=SweepCell(0.25, 0), error="ConfigError: boom"),
        )
    )

    assert result.rows() == [
        (0.5, "DCSC", _report(0.75), _report(0.5)),
        (0.5, "DCSC\N{DAGGER}", _report(0.25), _report(0.25)),
    ]
    assert result.failed_cells == ["kf0.25-seed0-full"]


def test_table_lists_baselines_once_per_fraction() -> None:
    result = SweepResult(
        outcomes=(
            CellOutcome(cell=SweepCell(0.5, 0), metrics=_report(1.0), raw_baseline=_report(0.5)),
            CellOutcome(cell=SweepCell(0.5, 0, ablation=True), metrics=_report(0.75), raw_baseline=_report(0.5)),
        )
    )

    lines = format_table(result, baselines=True).splitlines()
    assert lines[2:] == [
        "| 50% | K-Means++ (raw) | 0.5000 | 0.5000 | 0.5000 |",
        "| 50% | DCSC | 1.0000 | 1.0000 | 1.0000 |",
        "| 50% | DCSC\N{DAGGER} | 0.7500 | 0.7500 | 0.7500 |",
    ]
    assert len(format_table(result).splitlines()) == 4


def test_failing_cells_do_not_stop_the_sweep(tmp_path: pathlib.Path) -> None:
    mapping = {"data": {"train": str(tmp_path / "missing.jsonl"), "test": str(tmp_path / "missing.jsonl")}}
    result = run_sweep(mapping, SweepConfig(known_fractions=(0.5,), seeds=(0, 1)), out=tmp_path)

    assert result.failed_cells == ["kf0.50-seed0-full", "kf0.50-seed1-full"]
    assert all(o.error is not None and o.error.startswith("MalformedCorpusError") for o in result.outcomes)
    assert result.rows() == []


def test_failed_sweep_exits_with_an_error(
    tmp_path: pathlib.Path, capsys: pytest.CaptureFixture[str], monkeypatch: pytest.MonkeyPatch
) -> None:
    monkeypatch.delenv(cli.THREADS_ENV, raising=False)
    root = tmp_path.as_posix()
    config = tmp_path / "sweep.toml"
    config.write_text(
        f'out = "{root}/out"\n\n[data]\ntrain = "{root}/missing.jsonl"\ntest = "{root}/missing.jsonl"\n',
        encoding="utf-8",
    )

    assert cli.main(["sweep", "--config", str(config), "--known-fractions", "0.5", "--seeds", "0"]) == 1
    captured = capsys.readouterr()
    assert "SweepFailedError" in captured.err
    assert (tmp_path / "out" / "sweep.md").is_file()


def test_cells_set_their_thread_count(tmp_path: pathlib.Path, monkeypatch: pytest.MonkeyPatch) -> None:
    calls: list[int] = []
    monkeypatch.setattr(torch, "set_num_threads", calls.append)
    mapping = {"data": {"train": str(tmp_path / "missing.jsonl"), "test": str(tmp_path / "missing.jsonl")}}

    run_sweep(mapping, SweepConfig(known_fractions=(0.5,), seeds=(0, 1)), out=tmp_path, threads=2)
    assert calls == [2, 2]

    calls.clear()
    run_sweep(mapping, SweepConfig(known_fractions=(0.5,), seeds=(0,)), out=tmp_path)
    assert calls == []
