import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from src.core import functional as F
from src.core.errors import ConfigError, DimensionError
from src.core.tensor import Tensor, backward
from src.quant.ternarizer import (
    STE_CLIP,
    ThresholdSpec,
    TernaryTensor,
    compute_alpha,
    compute_threshold,
    dequantize,
    ste_backward,
    ternarize,
    ternary_weight,
)

W = np.array([0.5, -0.2, 0.05, -0.6])


class TestThreshold:
    def test_scalar_formula(self):
        assert compute_threshold(W, 0.2).delta_th == pytest.approx(0.12)

    def test_all_zero(self):
        assert compute_threshold(np.zeros(3), 0.05).delta_th == 0.0

    def test_single_element(self):
        assert compute_threshold(np.array([-1.0]), 0.05).delta_th == pytest.approx(0.05)

    @pytest.mark.parametrize("beta", [0.0, 1.0, -0.1, 1.5])
    def test_beta_outside_unit_interval(self, beta):
        with pytest.raises(ConfigError):
            compute_threshold(W, beta)

    def test_empty_tensor(self):
        with pytest.raises(DimensionError):
            compute_threshold(np.zeros(0), 0.05)


class TestAlpha:
    def test_scalar_formula(self):
        alpha = compute_alpha(W, ThresholdSpec(beta=0.2, delta_th=0.12))
        assert alpha == pytest.approx(1.3 / 3)

    def test_constant_magnitude(self):
        c = 0.37
        assert compute_alpha(np.array([c, -c, c]), ThresholdSpec(beta=0.1, delta_th=0.2)) == pytest.approx(c)

    def test_empty_over_threshold_set(self):
        assert compute_alpha(np.array([0.01, 0.02]), ThresholdSpec(beta=0.5, delta_th=0.5)) == 0.0


class TestTernarize:
    def test_codes_and_alpha(self):
        t = ternarize(W, 0.2)
        assert_array_equal(t.codes, [1, -1, 0, -1])
        assert t.alpha == pytest.approx(0.4333, abs=1e-4)
        assert t.beta == 0.2
        assert t.source_shape == (4,)

    def test_all_zero(self):
        t = ternarize(np.zeros(3), 0.1)
        assert_array_equal(t.codes, [0, 0, 0])
        assert t.alpha == 0.0

    def test_threshold_is_inclusive(self):
        # |w| == Δth keeps its sign
        t = ternarize(np.array([1.0, 0.5, -0.25]), 0.5)
        assert_array_equal(t.codes, [1, 1, 0])
        assert t.alpha == pytest.approx(0.75)

    def test_codes_are_int8_ternary(self, rng):
        t = ternarize(rng.normal(size=(8, 3, 3, 3)), 0.05)
        assert t.codes.dtype == np.int8
        assert set(np.unique(t.codes)) <= {-1, 0, 1}
        assert t.codes.shape == (8, 3, 3, 3)

    @pytest.mark.parametrize("k", [0.01, 0.5, 3.0, 250.0])
    def test_scale_equivariance(self, rng, k):
        v = rng.normal(size=200)
        base, scaled = ternarize(v, 0.3), ternarize(k * v, 0.3)
        assert_array_equal(base.codes, scaled.codes)
        assert scaled.alpha == pytest.approx(k * base.alpha, rel=1e-9)

    def test_sign_preservation(self, rng):
        w = rng.normal(size=500)
        t = ternarize(w, 0.2)
        nonzero = t.codes != 0
        assert_array_equal(t.codes[nonzero], np.sign(w[nonzero]))
        assert np.all(np.abs(w[~nonzero]) < 0.2 * np.abs(w).max())

    def test_alpha_is_mean_of_kept_magnitudes(self, rng):
        w = rng.normal(size=300)
        t = ternarize(w, 0.1)
        kept = np.abs(w)[t.codes != 0]
        assert t.alpha == pytest.approx(kept.mean())
        assert kept.min() <= t.alpha <= np.abs(w).max()

    def test_density_grows_as_threshold_falls(self, rng):
        w = rng.normal(size=1000)
        densities = [ternarize(w, b).density for b in (0.4, 0.2, 0.1, 0.05)]
        assert densities == sorted(densities)

    def test_tiny_beta_gives_full_density(self, rng):
        w = rng.uniform(0.1, 1.0, size=100) * rng.choice([-1, 1], size=100)
        assert ternarize(w, 1e-6).density == 1.0

    def test_independent_of_working_precision(self, rng):
        w = rng.normal(size=64)
        t32, t64 = ternarize(w.astype(np.float32), 0.1), ternarize(w.astype(np.float64), 0.1)
        assert t32.nonzero == t64.nonzero


def scalar_ternarize(values, beta):
    """Element-by-element reference on Python floats."""
    delta = beta * max(abs(v) for v in values)
    codes, kept = [], []
    for v in values:
        if abs(v) >= delta:
            codes.append(1 if v > 0 else (-1 if v < 0 else 0))
            kept.append(abs(v))
        else:
            codes.append(0)
    alpha = math.fsum(kept) / len(kept) if kept else 0.0
    return codes, alpha


def random_weights(rng, size):
    kind = rng.integers(4)
    if kind == 0:
        w = rng.normal(0.0, rng.uniform(0.01, 3.0), size)
    elif kind == 1:
        w = rng.uniform(-1.0, 1.0, size)
    elif kind == 2:
        w = rng.laplace(0.0, 0.1, size)
    else:
        # coarse grid, so values land exactly on the threshold
        w = rng.integers(-20, 21, size) / 20.0
    return w.astype(np.float32)


class TestScalarReference:
    def test_matches_reference_on_random_tensors(self):
        rng = np.random.default_rng(2024)
        for i in range(1000):
            size = int(np.exp(rng.uniform(0.0, np.log(1e5))))
            beta = float(rng.choice([0.05, 0.1, 0.2]))
            w = random_weights(rng, size)
            t = ternarize(w, beta)
            codes, alpha = scalar_ternarize(w.astype(np.float64).tolist(), beta)
            assert t.codes.tolist() == codes, (i, size, beta)
            assert t.alpha == pytest.approx(alpha, rel=1e-6, abs=0.0), (i, size, beta)

    def test_sign_symmetry(self):
        rng = np.random.default_rng(99)
        for _ in range(200):
            w = random_weights(rng, int(rng.integers(1, 5000)))
            beta = float(rng.choice([0.05, 0.1, 0.2]))
            t, flipped = ternarize(w, beta), ternarize(-w, beta)
            assert_array_equal(flipped.codes, -t.codes)
            assert flipped.alpha == t.alpha


class TestDequantize:
    def test_scaled_codes(self):
        t = TernaryTensor(codes=np.array([1, -1, 0], dtype=np.int8), alpha=0.5, beta=0.1, source_shape=(3,))
        assert_array_equal(dequantize(t), [0.5, -0.5, 0.0])

    def test_zero_codes(self):
        t = TernaryTensor(codes=np.zeros((2, 2), dtype=np.int8), alpha=0.9, beta=0.1, source_shape=(2, 2))
        assert not dequantize(t).any()

    def test_restores_source_shape(self, rng):
        w = rng.normal(size=(4, 2, 3, 3))
        assert dequantize(ternarize(w, 0.05)).shape == w.shape


class TestSteBackward:
    def test_pass_through(self):
        assert_array_equal(ste_backward(np.array([2.0]), np.array([0.5])), [2.0])

    def test_clipped(self):
        assert_array_equal(ste_backward(np.array([2.0]), np.array([1.5])), [0.0])

    def test_inclusive_boundary(self):
        assert_array_equal(ste_backward(np.array([-3.0, 4.0]), np.array([1.0, -1.0])), [-3.0, 4.0])

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            ste_backward(np.ones(3), np.ones(4))

    def test_randomized_mask(self, rng):
        w = rng.uniform(-2.0, 2.0, size=(5, 7))
        w[0, :3] = [1.0, -1.0, 0.0]
        g = rng.normal(size=(5, 7))
        expected = g * (np.abs(w) <= STE_CLIP)
        assert_array_equal(ste_backward(g, w), expected)


class TestTernaryWeightOp:
    def test_forward_is_dequantized_codes(self, rng):
        w = Tensor(rng.normal(size=(3, 4)), requires_grad=True)
        out, t = ternary_weight(w, 0.1)
        assert_allclose(out.data, t.alpha * t.codes, rtol=1e-6)

    def test_gradient_is_masked_upstream(self):
        w = Tensor([0.5, -1.0, 1.5, -2.0], requires_grad=True)
        r = np.array([1.0, 2.0, 3.0, 4.0])
        out, _ = ternary_weight(w, 0.1)
        backward(F.sum(F.mul(out, Tensor(r))))
        assert_array_equal(w.grad, [1.0, 2.0, 0.0, 0.0])

    def test_frozen_alpha_replaces_statistic(self, rng):
        w = Tensor(rng.normal(size=10), requires_grad=True)
        out, t = ternary_weight(w, 0.1, alpha=0.25)
        assert t.alpha == 0.25
        assert set(np.unique(np.abs(out.data))) <= {0.0, 0.25}
