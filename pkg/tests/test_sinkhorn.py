import logging

import numpy as np
import pytest

import dcsc
from dcsc.errors import ConfigError, NumericOverflowError


def test_constant_logits_give_uniform_assignment() -> None:
    soft = dcsc.sinkhorn_assign(np.full((6, 4), 0.3))
    np.testing.assert_allclose(soft.probabilities, 0.25, rtol=1e-12)


def test_dominant_columns_at_convergence() -> None:
    soft = dcsc.sinkhorn_assign([[10.0, 0.0], [0.0, 10.0]], epsilon=1.0, n_iters=200, tol=1e-6)
    assert soft.probabilities[0, 0] > 0.99
    assert soft.probabilities[1, 1] > 0.99


@pytest.mark.parametrize("seed", range(10))
def test_rows_sum_to_one(seed: int) -> None:
    rng = np.random.default_rng(seed)
    q = rng.normal(scale=5.0, size=(int(rng.integers(1, 20)), int(rng.integers(1, 8))))

    soft = dcsc.sinkhorn_assign(q, epsilon=float(rng.uniform(0.01, 1.0)), n_iters=int(rng.integers(1, 10)))
    np.testing.assert_allclose(soft.probabilities.sum(axis=1), 1.0, rtol=0, atol=1e-9)
    assert np.all(soft.probabilities >= 0.0)
    assert np.all(soft.probabilities <= 1.0)


@pytest.mark.parametrize("seed", range(5))
def test_column_marginals_converge(seed: int) -> None:
    rng = np.random.default_rng(seed)
    g = int(rng.integers(2, 8))
    q = rng.uniform(-1.0, 1.0, size=(4 * g, g))

    soft = dcsc.sinkhorn_assign(q, epsilon=0.5, n_iters=200)
    deviations = soft.column_deviation
    assert deviations[-1] <= 1e-3
    assert all(later <= earlier + 1e-12 for earlier, later in zip(deviations, deviations[1:]))


def test_early_stop_with_tolerance() -> None:
    q = np.random.default_rng(0).uniform(-1.0, 1.0, size=(12, 3))
    soft = dcsc.sinkhorn_assign(q, epsilon=0.5, n_iters=200, tol=1e-6)

    assert soft.iterations_used < 200
    assert soft.column_deviation[-1] <= 1e-6


def test_row_shift_invariance() -> None:
    rng = np.random.default_rng(1)
    q = rng.normal(size=(8, 4))
    shifted = q + rng.normal(scale=3.0, size=(8, 1))

    np.testing.assert_allclose(
        dcsc.sinkhorn_assign(q, n_iters=5).probabilities,
        dcsc.sinkhorn_assign(shifted, n_iters=5).probabilities,
        rtol=1e-9,
        atol=1e-12,
    )


def test_harden_is_permutation_equivariant() -> None:
    rng = np.random.default_rng(2)
    q = rng.normal(size=(10, 4))
    order = rng.permutation(10)

    labels = dcsc.harden(dcsc.sinkhorn_assign(q)).labels
    permuted = dcsc.harden(dcsc.sinkhorn_assign(q[order])).labels
    np.testing.assert_array_equal(permuted, labels[order])


def test_harden() -> None:
    rows = np.array([[0.0, 1.0, 0.0], [1 / 3, 1 / 3, 1 / 3], [0.2, 0.5, 0.3]])
    assert dcsc.harden(rows).labels.tolist() == [1, 0, 1]


def test_small_batch_is_flagged(caplog: pytest.LogCaptureFixture) -> None:
    with caplog.at_level(logging.WARNING):
        soft = dcsc.sinkhorn_assign(np.zeros((2, 5)))

    assert soft.underfilled
    assert "cannot be filled" in caplog.text
    assert not dcsc.sinkhorn_assign(np.zeros((5, 5))).underfilled


def test_invalid_arguments() -> None:
    with pytest.raises(ConfigError):
        dcsc.sinkhorn_assign(np.zeros((2, 2)), epsilon=0.0)

    with pytest.raises(ConfigError):
        dcsc.sinkhorn_assign(np.zeros((2, 2)), n_iters=0)

    with pytest.raises(NumericOverflowError):
        dcsc.sinkhorn_assign([[0.0, float("inf")]])
