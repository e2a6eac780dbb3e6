import typing as t

import numpy as np
import pytest

import dcsc
from dcsc.config import TrainConfig
from dcsc.synth import BlobSpec


def make_corpus(counts: t.Sequence[int], *, dim: int = 4, seed: int = 0, spread: float = 10.0) -> dcsc.Corpus:
    """A corpus whose intent `i` has `counts[i]` samples around a random center."""
    rng = np.random.default_rng(seed)
    centers = rng.uniform(0.0, spread, size=(len(counts), dim))
    samples = [
        dcsc.Sample(f"i{intent}-{index}", centers[intent] + 0.1 * rng.standard_normal(dim), intent)
        for intent, count in enumerate(counts)
        for index in range(count)
    ]
    return dcsc.Corpus(samples, num_intents=len(counts))


@pytest.fixture
def corpus_factory() -> t.Callable[..., dcsc.Corpus]:
    return make_corpus


@pytest.fixture
def blobs() -> dcsc.Corpus:
    """Four well separated intents, 30 samples each."""
    return dcsc.generate(BlobSpec(num_clusters=4, samples_per_cluster=30, input_dim=6, sigma=0.2, seed=3))


@pytest.fixture
def fast_config() -> TrainConfig:
    """A configuration small enough for a handful of epochs in a unit test."""
    return TrainConfig(
        warmup_epochs=2,
        cluster_epochs=2,
        learning_rate=1e-3,
        supervised_batch_size=16,
        unsupervised_batch_size=32,
        cluster_batch_size=32,
        seed=7,
    )


@pytest.fixture
def small_encoder_config() -> dcsc.EncoderConfig:
    return dcsc.EncoderConfig(input_dim=6, hidden_dims=(16,), output_dim=8, dropout=0.1)
