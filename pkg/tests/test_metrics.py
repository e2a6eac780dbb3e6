import collections
import itertools
import math

import numpy as np
import pytest

import dcsc
from dcsc.errors import InsufficientDataError, ShapeMismatchError
from dcsc.metrics import score


def _brute_force_accuracy(pred: list[int], true: list[int]) -> float:
    clusters, classes = sorted(set(pred)), sorted(set(true))
    best = 0
    if len(clusters) <= len(classes):
        for image in itertools.permutations(classes, len(clusters)):
            mapping = dict(zip(clusters, image))
            best = max(best, sum(mapping[p] == y for p, y in zip(pred, true)))
    else:
        for image in itertools.permutations(clusters, len(classes)):
            mapping = dict(zip(classes, image))
            best = max(best, sum(mapping[y] == p for p, y in zip(pred, true)))
    return best / len(pred)


def _pair_counting_ari(pred: list[int], true: list[int]) -> float:
    n = len(pred)
    pairs = list(itertools.combinations(range(n), 2))
    both = sum(pred[i] == pred[j] and true[i] == true[j] for i, j in pairs)
    same_pred = sum(pred[i] == pred[j] for i, j in pairs)
    same_true = sum(true[i] == true[j] for i, j in pairs)
    expected = same_pred * same_true / len(pairs)
    maximum = (same_pred + same_true) / 2
    if maximum == expected:
        return 1.0
    return (both - expected) / (maximum - expected)


def _direct_nmi(pred: list[int], true: list[int]) -> float:
    n = len(pred)
    joint = collections.Counter(zip(pred, true))
    p_counts, t_counts = collections.Counter(pred), collections.Counter(true)

    def entropy(counts: collections.Counter[int]) -> float:
        return -sum(c / n * math.log(c / n) for c in counts.values())

    h_pred, h_true = entropy(p_counts), entropy(t_counts)
    if h_pred == 0.0 and h_true == 0.0:
        return 1.0
    mutual = sum(c / n * math.log(c * n / (p_counts[p] * t_counts[y])) for (p, y), c in joint.items())
    return mutual / ((h_pred + h_true) / 2)


def test_accuracy_with_one_mistake() -> None:
    assert dcsc.clustering_accuracy([1, 1, 0, 0], [0, 0, 1, 0]) == 0.75


def test_perfect_relabeled_clustering() -> None:
    report = score([2, 2, 0, 0, 1, 1], [0, 0, 1, 1, 2, 2])
    assert report.acc == 1.0
    assert report.ari == 1.0
    assert report.nmi == pytest.approx(1.0, abs=1e-12)


def test_constant_prediction() -> None:
    true = [0, 0, 1, 1, 2, 2]
    pred = [0] * 6
    assert dcsc.ari(pred, true) == 0.0
    assert dcsc.nmi(pred, true) == pytest.approx(0.0, abs=1e-12)
    assert dcsc.clustering_accuracy(pred, true) == pytest.approx(1 / 3)


def test_single_cluster_on_both_sides() -> None:
    assert score([3, 3, 3], [0, 0, 0]) == dcsc.MetricReport(acc=1.0, ari=1.0, nmi=1.0)


def test_single_sample() -> None:
    assert score([0], [5]) == dcsc.MetricReport(acc=1.0, ari=1.0, nmi=1.0)
    with pytest.raises(InsufficientDataError):
        dcsc.ari([0], [0])


def test_metrics_match_oracles() -> None:
    rng = np.random.default_rng(0)
    for _ in range(200):
        n = int(rng.integers(2, 13))
        pred = rng.integers(0, int(rng.integers(1, 5)), size=n).tolist()
        true = rng.integers(0, int(rng.integers(1, 5)), size=n).tolist()

        assert dcsc.clustering_accuracy(pred, true) == pytest.approx(_brute_force_accuracy(pred, true), abs=1e-12)
        assert dcsc.ari(pred, true) == pytest.approx(_pair_counting_ari(pred, true), abs=1e-12)
        assert dcsc.nmi(pred, true) == pytest.approx(min(1.0, max(0.0, _direct_nmi(pred, true))), abs=1e-12)


def test_metrics_match_oracles_on_larger_labelings() -> None:
    rng = np.random.default_rng(1)
    for _ in range(10):
        pred = rng.integers(0, 6, size=80).tolist()
        true = rng.integers(0, 5, size=80).tolist()

        assert dcsc.ari(pred, true) == pytest.approx(_pair_counting_ari(pred, true), abs=1e-10)
        assert dcsc.nmi(pred, true) == pytest.approx(_direct_nmi(pred, true), abs=1e-10)


def test_nmi_of_constant_labelings() -> None:
    assert dcsc.nmi([4, 4, 4, 4], [1, 1, 1, 1]) == 1.0
    assert dcsc.nmi([0, 1, 2, 3], [1, 1, 1, 1]) == pytest.approx(0.0, abs=1e-12)
    assert dcsc.ari([0, 1, 2, 3], [5, 6, 7, 8]) == 1.0


def test_metrics_ignore_label_names() -> None:
    rng = np.random.default_rng(2)
    pred = rng.integers(0, 4, size=50)
    true = rng.integers(0, 4, size=50)
    renamed = np.array([7, 3, 11, 5])[pred]

    renamed_report, report = score(renamed, true), score(pred, true)
    assert renamed_report.acc == report.acc
    assert renamed_report.ari == pytest.approx(report.ari, abs=1e-12)
    assert renamed_report.nmi == pytest.approx(report.nmi, abs=1e-12)


def test_accuracy_lower_bound() -> None:
    rng = np.random.default_rng(3)
    for _ in range(50):
        pred = rng.integers(0, 5, size=40)
        true = rng.integers(0, 3, size=40)
        table = dcsc.ContingencyTable.from_labels(pred, true)
        assert dcsc.clustering_accuracy(pred, true) >= 1 / max(table.shape) - 1e-12


def test_contingency_table() -> None:
    table = dcsc.ContingencyTable.from_labels([5, 5, 9], [1, 2, 2])
    assert table.counts.tolist() == [[1, 1], [0, 1]]
    assert table.n == 3


def test_length_mismatch() -> None:
    with pytest.raises(ShapeMismatchError):
        dcsc.clustering_accuracy([0, 1], [0, 1, 1])

    with pytest.raises(ShapeMismatchError):
        dcsc.nmi([0], [0, 1])


def test_report_helpers() -> None:
    first = dcsc.MetricReport(acc=0.5, ari=0.25, nmi=1.0)
    second = dcsc.MetricReport(acc=1.0, ari=0.75, nmi=0.0)

    assert dcsc.MetricReport.mean([first, second]) == dcsc.MetricReport(acc=0.75, ari=0.5, nmi=0.5)
    assert dcsc.MetricReport.from_dict(first.to_dict()) == first
    assert first.format() == "ACC 0.5000  ARI 0.2500  NMI 1.0000"

    with pytest.raises(InsufficientDataError):
        dcsc.MetricReport.mean([])
