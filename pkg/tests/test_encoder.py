import numpy as np
import pytest
import torch

import dcsc
from dcsc.encoder import pool_batch
from dcsc.errors import MalformedSampleError, MissingCacheError, NumericOverflowError, ShapeMismatchError


def _encoder(**kwargs: object) -> dcsc.Encoder:
    config = dcsc.EncoderConfig(**{"input_dim": 5, "hidden_dims": (7,), "output_dim": 4, **kwargs})
    return dcsc.Encoder(config, generator=torch.Generator().manual_seed(0))


def _batch(n: int = 8, dim: int = 5, seed: int = 0) -> torch.Tensor:
    return torch.from_numpy(np.random.default_rng(seed).standard_normal((n, dim)))


def test_mean_pool() -> None:
    np.testing.assert_array_equal(dcsc.mean_pool([[3.0, 1.0]]), [3.0, 1.0])
    np.testing.assert_array_equal(dcsc.mean_pool([[1.0, 0.0], [0.0, 1.0]]), [0.5, 0.5])
    np.testing.assert_array_equal(dcsc.mean_pool([[2.0, 4.0], [4.0, 8.0], [0.0, 0.0]]), [2.0, 4.0])
    np.testing.assert_array_equal(dcsc.mean_pool([1.0, 2.0]), [1.0, 2.0])


def test_mean_pool_rejects_empty_sequence() -> None:
    with pytest.raises(MalformedSampleError):
        dcsc.mean_pool(np.zeros((0, 3)))


def test_pool_batch_mixes_vectors_and_sequences() -> None:
    samples = [dcsc.Sample("a", [1.0, 1.0]), dcsc.Sample("b", [[0.0, 2.0], [2.0, 0.0]])]
    np.testing.assert_array_equal(pool_batch(samples).numpy(), [[1.0, 1.0], [1.0, 1.0]])


def test_no_dropout_gives_identical_views() -> None:
    encoder = _encoder(dropout=0.0)
    views = dcsc.forward_two_views(encoder, _batch(), torch.Generator().manual_seed(1))
    assert torch.equal(views.z, views.z_prime)


def test_same_mask_seed_gives_identical_views() -> None:
    encoder = _encoder(dropout=0.5)
    views = dcsc.forward_two_views(encoder, _batch(), seeds=(3, 3))
    assert torch.equal(views.z, views.z_prime)

    different = dcsc.forward_two_views(encoder, _batch(), seeds=(3, 4))
    assert not torch.equal(different.z, different.z_prime)


def test_views_are_reproducible() -> None:
    encoder = _encoder(dropout=0.3)
    first = dcsc.forward_two_views(encoder, _batch(), torch.Generator().manual_seed(9))
    second = dcsc.forward_two_views(encoder, _batch(), torch.Generator().manual_seed(9))

    assert first.dropout_mask_seeds == second.dropout_mask_seeds
    assert torch.equal(first.z, second.z)
    assert torch.equal(first.z_prime, second.z_prime)


def test_outputs_are_unit_norm() -> None:
    views = dcsc.forward_two_views(_encoder(), _batch(), torch.Generator().manual_seed(0))
    torch.testing.assert_close(views.z.norm(dim=1), torch.ones(8, dtype=torch.float64), rtol=0, atol=1e-9)


def test_zero_upstream_gradient() -> None:
    encoder = _encoder()
    views = dcsc.forward_two_views(encoder, _batch(), torch.Generator().manual_seed(0))
    grads = dcsc.backward(encoder, views, torch.zeros_like(views.z), torch.zeros_like(views.z_prime))

    assert set(grads) == {name for name, _ in encoder.named_parameters()}
    assert all(not grad.any() for grad in grads.values())


def test_single_linear_layer_gradient_closed_form() -> None:
    encoder = _encoder(hidden_dims=(), dropout=0.0, normalize_output=False)
    batch = _batch(n=3)
    views = dcsc.forward_two_views(encoder, batch, seeds=(0, 0))

    upstream = torch.from_numpy(np.random.default_rng(1).standard_normal((3, 4)))
    grads = dcsc.backward(encoder, views, upstream, torch.zeros_like(upstream))

    torch.testing.assert_close(grads["layers.0.weight"], upstream.T @ batch, rtol=1e-12, atol=1e-12)
    torch.testing.assert_close(grads["layers.0.bias"], upstream.sum(dim=0), rtol=1e-12, atol=1e-12)


def test_backward_matches_finite_differences() -> None:
    encoder = _encoder(dropout=0.2)
    batch = _batch()
    rng = np.random.default_rng(4)
    upstream = torch.from_numpy(rng.standard_normal((8, 4)))
    upstream_prime = torch.from_numpy(rng.standard_normal((8, 4)))

    views = dcsc.forward_two_views(encoder, batch, seeds=(10, 11))
    grads = dcsc.backward(encoder, views, upstream, upstream_prime)

    def objective() -> float:
        with torch.no_grad():
            again = dcsc.forward_two_views(encoder, batch, seeds=(10, 11))
            return float((again.z * upstream).sum() + (again.z_prime * upstream_prime).sum())

    step = 1e-5
    for name, param in encoder.named_parameters():
        flat = param.data.view(-1)
        for index in range(0, flat.numel(), 3):
            original = float(flat[index])
            flat[index] = original + step
            plus = objective()
            flat[index] = original - step
            minus = objective()
            flat[index] = original

            numeric = (plus - minus) / (2 * step)
            analytic = float(grads[name].view(-1)[index])
            assert analytic == pytest.approx(numeric, rel=1e-4, abs=1e-7), (name, index)


def test_normalization_gradient_is_orthogonal_to_output() -> None:
    encoder = _encoder(dropout=0.0)
    x = _batch().requires_grad_(True)
    z = encoder(x)
    upstream = torch.from_numpy(np.random.default_rng(2).standard_normal(z.shape))

    h = encoder.layers[-1](torch.tanh(encoder.layers[0](x)))
    (grad_h,) = torch.autograd.grad(torch.nn.functional.normalize(h, dim=1), h, upstream)
    assert (grad_h * h).sum(dim=1).abs().max() < 1e-8


def test_backward_without_graph() -> None:
    encoder = _encoder()
    with torch.no_grad():
        views = dcsc.forward_two_views(encoder, _batch(), torch.Generator().manual_seed(0))

    with pytest.raises(MissingCacheError):
        dcsc.backward(encoder, views, torch.zeros_like(views.z), torch.zeros_like(views.z_prime))


def test_non_finite_activation_names_layer() -> None:
    encoder = _encoder(activation="identity", dropout=0.0, normalize_output=False)
    with torch.no_grad():
        encoder.layers[0].weight.fill_(10.0)

    with pytest.raises(NumericOverflowError) as exc_info:
        encoder(torch.full((2, 5), 1e308, dtype=torch.float64))
    assert exc_info.value.layer == "layers.0"


def test_input_dimension_is_checked() -> None:
    with pytest.raises(ShapeMismatchError):
        _encoder()(torch.zeros((2, 3), dtype=torch.float64))


def test_fit_input_standardizes_features() -> None:
    features = np.random.default_rng(2).normal(loc=5.0, scale=3.0, size=(50, 5))
    features[:, 2] = 7.0
    encoder = _encoder(dropout=0.0)
    encoder.fit_input(features)

    expected_scale = features.std(axis=0)
    expected_scale[2] = 1.0
    np.testing.assert_allclose(encoder.input_shift.numpy(), features.mean(axis=0), rtol=1e-12)
    np.testing.assert_allclose(encoder.input_scale.numpy(), expected_scale, rtol=1e-12)

    standardized = (features - encoder.input_shift.numpy()) / encoder.input_scale.numpy()
    reference = _encoder(dropout=0.0)
    torch.testing.assert_close(
        encoder(torch.from_numpy(features)), reference(torch.from_numpy(standardized)), rtol=1e-12, atol=1e-12
    )

    with pytest.raises(ShapeMismatchError):
        encoder.fit_input(np.zeros((0, 5)))


def test_encode_disables_dropout() -> None:
    encoder = _encoder(dropout=0.5)
    samples = [dcsc.Sample(f"s{i}", row) for i, row in enumerate(_batch(n=4).numpy())]

    first = dcsc.encode(encoder, samples)
    second = dcsc.encode(encoder, samples, batch_size=3)
    np.testing.assert_allclose(first, second, rtol=0, atol=1e-12)
    assert first.shape == (4, 4)
    assert dcsc.encode(encoder, []).shape == (0, 4)
