import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from nmps.features import (
    FeatureMap,
    encode,
    encode_batch,
    feature_gradient,
    init_feature_map,
    sample_task,
    train_feature,
)

finite = st.floats(-5, 5, allow_nan=False, allow_infinity=False)


class TestEncode:
    def test_identity_weights(self):
        fmap = FeatureMap(np.eye(4), nonlinearity="linear")
        assert np.allclose(encode(fmap, [1, 0, 0, 0]), [1, 0, 0, 0])

    def test_zero_vector_maps_to_first_basis(self):
        fmap = FeatureMap(np.eye(3))
        assert np.array_equal(encode(fmap, np.zeros(3)), [1.0, 0.0, 0.0])

    def test_shape_mismatch(self):
        fmap = init_feature_map(5, 3, 0)
        with pytest.raises(ValueError):
            encode(fmap, np.zeros(4))

    def test_linear_encoder_is_scale_invariant(self, rng):
        fmap = init_feature_map(6, 4, rng, nonlinearity="linear")
        x = rng.normal(size=6)
        assert np.allclose(encode(fmap, 3 * x), encode(fmap, x), atol=1e-12)

    def test_batch_matches_single(self, rng):
        fmap = init_feature_map(8, 5, rng)
        xs = rng.normal(size=(7, 8))
        assert np.allclose(encode_batch(fmap, xs), [encode(fmap, x) for x in xs])

    @settings(max_examples=50, deadline=None)
    @given(x=arrays(float, 6, elements=finite), seed=st.integers(0, 1000))
    def test_unit_norm_and_bounded_reward(self, x, seed):
        rng = np.random.default_rng(seed)
        fmap = init_feature_map(6, 4, rng)
        phi = encode(fmap, x)
        assert abs(np.linalg.norm(phi) - 1.0) <= 1e-6
        w = sample_task(4, rng).w
        assert -1.0 - 1e-12 <= phi @ w <= 1.0 + 1e-12


class TestSampleTask:
    def test_one_dimensional(self, rng):
        vals = {float(sample_task(1, rng).w[0]) for _ in range(50)}
        assert vals <= {1.0, -1.0}
        assert len(vals) == 2

    def test_unit_norm(self, rng):
        for _ in range(100):
            t = sample_task(10, rng)
            assert abs(np.linalg.norm(t.w) - 1.0) <= 1e-9
            assert t.origin == "sampled"

    def test_isotropic_mean(self, rng):
        ws = np.array([sample_task(10, rng).w for _ in range(100_000)])
        assert np.all(np.abs(ws.mean(axis=0)) <= 0.02)

    def test_rejects_bad_dim(self, rng):
        with pytest.raises(ValueError):
            sample_task(0, rng)


class TestTrainFeature:
    def test_gradient_matches_finite_differences(self, rng):
        fmap = init_feature_map(5, 4, rng, scale=0.7)
        obs = rng.normal(size=(6, 5))
        ws = np.array([sample_task(4, rng).w for _ in range(6)])
        analytic = feature_gradient(fmap, obs, ws)

        def objective(weights):
            f = FeatureMap(weights)
            return float(np.mean(np.sum(encode_batch(f, obs) * ws, axis=1)))

        h = 1e-5
        numeric = np.zeros_like(fmap.weights)
        for idx in np.ndindex(*fmap.weights.shape):
            up, dn = fmap.weights.copy(), fmap.weights.copy()
            up[idx] += h
            dn[idx] -= h
            numeric[idx] = (objective(up) - objective(dn)) / (2 * h)
        rel = np.linalg.norm(analytic - numeric) / np.linalg.norm(numeric)
        assert rel <= 1e-3

    def test_no_gradient_at_maximum(self):
        fmap = FeatureMap(np.eye(3), nonlinearity="linear")
        obs = np.eye(3)
        g = feature_gradient(fmap, obs, encode_batch(fmap, obs))
        assert np.linalg.norm(g) <= 1e-6

    def test_alignment_rises_monotonically(self, rng):
        fmap = init_feature_map(6, 4, rng, learning_rate=0.01)
        x = rng.normal(size=6)
        w = sample_task(4, rng).w
        values = []
        for _ in range(300):
            values.append(float(encode(fmap, x) @ w))
            fmap = train_feature(fmap, x[None], w[None])
        assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))
        assert values[-1] > values[0]
        assert values[-1] <= 1.0

    def test_input_not_mutated(self, rng):
        fmap = init_feature_map(4, 3, rng)
        before = fmap.weights.copy()
        new = train_feature(fmap, rng.normal(size=(5, 4)), rng.normal(size=(5, 3)))
        assert np.array_equal(fmap.weights, before)
        assert not np.array_equal(new.weights, before)

    def test_frozen_map_is_identity_with_warning(self, rng):
        fmap = init_feature_map(4, 3, rng, trainable=False)
        with pytest.warns(RuntimeWarning):
            out = train_feature(fmap, rng.normal(size=(5, 4)), rng.normal(size=(5, 3)))
        assert out is fmap
        assert np.array_equal(out.weights, fmap.weights)
