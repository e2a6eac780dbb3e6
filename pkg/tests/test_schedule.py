import logging

import numpy as np
import pytest

import dcsc
from dcsc.errors import ConfigError


def _samples(count: int, prefix: str = "s") -> list[dcsc.Sample]:
    return [dcsc.Sample(f"{prefix}{i}", [float(i)], 0) for i in range(count)]


def test_modes_alternate_starting_supervised() -> None:
    schedule = dcsc.BatchSchedule(_samples(10, "l"), _samples(50), np.random.default_rng(0))

    modes = [schedule.next_batch("warmup")[0] for _ in range(4)]
    assert modes == ["supervised", "unsupervised", "supervised", "unsupervised"]


def test_supervised_batches_come_from_labeled_pool() -> None:
    labeled = _samples(10, "l")
    schedule = dcsc.BatchSchedule(labeled, _samples(50), np.random.default_rng(0), supervised_batch_size=4)

    mode, batch = schedule.next_batch("warmup")
    assert mode == "supervised"
    assert len(batch) == 4
    assert all(s.id.startswith("l") for s in batch)


def test_short_final_batch_is_kept() -> None:
    schedule = dcsc.BatchSchedule([], _samples(300), np.random.default_rng(0), cluster_batch_size=128)

    sizes = [len(batch) for _, batch in schedule.epoch("cluster", supervised=False)]
    assert sizes == [128, 128, 44]


def test_epoch_samples_without_replacement() -> None:
    pool = _samples(300)
    schedule = dcsc.BatchSchedule([], pool, np.random.default_rng(1), unsupervised_batch_size=64)

    seen = [s.id for _, batch in schedule.epoch("warmup", supervised=False) for s in batch]
    assert sorted(seen) == sorted(s.id for s in pool)


def test_epoch_reshuffles() -> None:
    schedule = dcsc.BatchSchedule([], _samples(100), np.random.default_rng(2), unsupervised_batch_size=100)

    first = [s.id for _, batch in schedule.epoch("warmup", supervised=False) for s in batch]
    second = [s.id for _, batch in schedule.epoch("warmup", supervised=False) for s in batch]
    assert sorted(first) == sorted(second)
    assert first != second


def test_epoch_alternation_covers_larger_pool() -> None:
    schedule = dcsc.BatchSchedule(
        _samples(10, "l"),
        _samples(100),
        np.random.default_rng(0),
        supervised_batch_size=4,
        unsupervised_batch_size=25,
    )

    steps = list(schedule.epoch("warmup"))
    modes = [mode for mode, _ in steps]
    assert modes == ["supervised", "unsupervised"] * 4

    unsupervised = [s.id for mode, batch in steps if mode == "unsupervised" for s in batch]
    assert len(set(unsupervised)) == 100


def test_schedule_is_deterministic() -> None:
    def ids(seed: int) -> list[list[str]]:
        schedule = dcsc.BatchSchedule(_samples(10, "l"), _samples(40), np.random.default_rng(seed))
        return [[s.id for s in batch] for _, batch in schedule.epoch("warmup")]

    assert ids(5) == ids(5)
    assert ids(5) != ids(6)


def test_empty_labeled_pool_is_degenerate(caplog: pytest.LogCaptureFixture) -> None:
    schedule = dcsc.BatchSchedule([], _samples(20), np.random.default_rng(0))
    assert schedule.degenerate

    with caplog.at_level(logging.WARNING):
        modes = [schedule.next_batch("warmup")[0] for _ in range(3)]

    assert modes == ["unsupervised"] * 3
    assert sum("labeled pool is empty" in record.message for record in caplog.records) == 1


def test_batch_sizes_must_be_positive() -> None:
    with pytest.raises(ConfigError):
        dcsc.BatchSchedule([], _samples(3), np.random.default_rng(0), cluster_batch_size=0)
