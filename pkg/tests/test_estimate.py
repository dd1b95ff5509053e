import math

import numpy as np
import pytest

from accel_eval import estimate
from accel_eval.estimate import (
    crude_mc,
    default_checkpoints,
    importance_sampling,
    rel_half_width,
    required_samples_crude,
    sequential_update,
    summarize,
    z_value,
)
from accel_eval.exceptions import EstimationError
from accel_eval.gaussmath import MultivariateGaussian
from accel_eval.gmm import GaussianMixture, sample_mixture
from accel_eval.scenarios import Scenario, toy_distribution, toy_scenario

from oracles import TOY_X3_P


def constant_scenario(value):
    return Scenario("const", np.array([-1e9, -1e9]), np.array([1e9, 1e9]), toy_distribution(),
                    lambda x: np.full(x.shape[0], value, dtype=np.int8))


def shifted(mean, scale=1.0):
    return GaussianMixture([1.0], [MultivariateGaussian(mean, scale * np.eye(2))])


class TestHalfWidth:
    def test_z(self):
        assert z_value(0.95) == pytest.approx(1.959963984540054, abs=1e-12)

    def test_substitution(self):
        assert rel_half_width(0.5, 0.5, 10_000) == pytest.approx(1.959963984540054 / 100, rel=1e-12)

    def test_zero_sigma(self):
        assert rel_half_width(0.3, 0.0, 10) == 0.0

    def test_zero_p_is_infinite(self):
        assert math.isinf(rel_half_width(0.0, 0.0, 10))
        assert math.isinf(rel_half_width(0.0, 0.1, 10))

    def test_sqrt_n(self):
        assert rel_half_width(0.1, 0.3, 400) == pytest.approx(rel_half_width(0.1, 0.3, 100) / 2, rel=1e-14)

    def test_bad_input(self):
        with pytest.raises(ValueError):
            rel_half_width(0.1, 0.1, 0)
        with pytest.raises(ValueError):
            z_value(1.0)


class TestRequiredSamples:
    def test_inverse_of_half_width(self):
        assert required_samples_crude(0.5, 0.0196) == pytest.approx(10_000, rel=1e-3)

    def test_rare_event_scale(self):
        # (z / 0.4)^2 / p: ~1.2e7 at p = 2e-6 and ~1.2e10 at p = 2e-9
        assert required_samples_crude(2e-6, 0.4) == pytest.approx(1.2e7, rel=0.01)
        assert required_samples_crude(2e-9, 0.4) == pytest.approx(1.2e10, rel=0.01)

    def test_p_near_one(self):
        assert required_samples_crude(1 - 1e-9, 0.1) <= 1

    def test_bad_p(self):
        for p in (0.0, 1.0, -0.1, 2.0):
            with pytest.raises(ValueError):
                required_samples_crude(p, 0.1)


class TestSummarize:
    def test_checkpoints_default(self):
        cps = default_checkpoints(2000)
        assert cps[0] == 10 and cps[-1] == 2000 and len(cps) == 200
        assert default_checkpoints(7) == list(range(1, 8))

    def test_trace_monotone_and_final(self, rng):
        v = rng.random(1000)
        r = summarize(v, v > 0.5, [10, 500])
        assert r.trace_n.tolist() == [10, 500, 1000]
        assert r.p_hat == pytest.approx(v.mean(), rel=1e-13)
        assert r.sigma_hat == pytest.approx(v.std(ddof=1), rel=1e-10)
        assert r.trace_p[0] == pytest.approx(v[:10].mean(), rel=1e-13)

    def test_bad_checkpoints(self, rng):
        with pytest.raises(ValueError):
            summarize(rng.random(10), np.zeros(10), [0, 5])
        with pytest.raises(ValueError):
            summarize(rng.random(10), np.zeros(10), [11])


class TestCrude:
    def test_constant_zero(self, rng):
        r = crude_mc(constant_scenario(0), 1000, rng=rng)
        assert r.p_hat == 0.0 and math.isinf(r.rel_half_width)

    def test_constant_one(self, rng):
        r = crude_mc(constant_scenario(1), 1000, rng=rng)
        assert r.p_hat == 1.0 and r.sigma_hat == 0.0

    def test_inflated_toy_against_oracle(self):
        r = crude_mc(toy_scenario(3.0), 100_000, rng=np.random.default_rng(3))
        sd = math.sqrt(TOY_X3_P * (1 - TOY_X3_P) / 100_000)
        assert abs(r.p_hat - TOY_X3_P) <= 3 * sd

    def test_deterministic(self):
        a = crude_mc(toy_scenario(3.0), 5000, rng=np.random.default_rng(1))
        b = crude_mc(toy_scenario(3.0), 5000, rng=np.random.default_rng(1))
        assert a.p_hat == b.p_hat and np.array_equal(a.trace_p, b.trace_p)


class TestImportanceSampling:
    def test_f_star_equal_f_matches_crude(self):
        sc = toy_scenario(3.0)
        a = importance_sampling(sc, sc.distribution, 20_000, rng=np.random.default_rng(4))
        b = crude_mc(sc, 20_000, rng=np.random.default_rng(4))
        assert a.p_hat == pytest.approx(b.p_hat, rel=1e-12)
        assert a.hit_count == b.hit_count

    def test_indicator_one_gives_unit_mean(self):
        r = importance_sampling(constant_scenario(1), shifted([1.5, 0.5], 1.5), 100_000,
                                rng=np.random.default_rng(5))
        assert abs(r.p_hat - 1.0) <= 3 * r.sigma_hat / math.sqrt(r.n_samples)

    def test_weight_mean_near_one(self):
        f = toy_distribution()
        f_star = shifted([0.5, 0.5], 1.2)
        x = sample_mixture(f_star, 100_000, np.random.default_rng(6))
        assert 0.9 <= estimate.likelihood_ratio(f, f_star, x).mean() <= 1.1

    def test_prefix_property(self):
        sc = toy_scenario(3.0)
        f_star = shifted([2.0, 2.0], 1.5)
        full = importance_sampling(sc, f_star, 10_000, checkpoints=[1000, 5000], rng=np.random.default_rng(7))
        for c in (1000, 5000):
            part = importance_sampling(sc, f_star, c, rng=np.random.default_rng(7))
            i = full.trace_n.tolist().index(c)
            assert full.trace_p[i] == part.p_hat
            assert full.trace_w[i] == part.rel_half_width

    def test_dimension_mismatch(self):
        f3 = GaussianMixture([1.0], [MultivariateGaussian(np.zeros(3), np.eye(3))])
        with pytest.raises(ValueError):
            importance_sampling(toy_scenario(), f3, 10)

    def test_nonfinite_ratios_abort(self, monkeypatch):
        sc = toy_scenario(3.0)
        monkeypatch.setattr(estimate, "likelihood_ratio", lambda f, fs, x: np.full(x.shape[0], np.inf))
        with pytest.raises(EstimationError):
            importance_sampling(sc, sc.distribution, 2000, rng=np.random.default_rng(0))

    def test_rare_nonfinite_counted(self, monkeypatch):
        sc = toy_scenario(3.0)
        real = estimate.likelihood_ratio

        def one_bad(f, fs, x):
            out = real(f, fs, x)
            out[0] = np.nan
            return out

        monkeypatch.setattr(estimate, "likelihood_ratio", one_bad)
        r = importance_sampling(sc, sc.distribution, 2000, rng=np.random.default_rng(0))
        assert r.nonfinite == 1 and np.isfinite(r.p_hat)

    def test_unbiased_on_inflated_toy(self):
        sc = toy_scenario(3.0)
        f_star = shifted([2.0, 2.0], 2.0)
        r = importance_sampling(sc, f_star, 50_000, rng=np.random.default_rng(8))
        assert abs(r.p_hat - TOY_X3_P) <= 3 * r.std_error


class TestSequentialUpdate:
    def test_empty(self):
        x, y = np.array([[0.0, 1.0]]), np.array([1])
        x2, y2 = sequential_update(x, y, np.empty((0, 2)), np.empty(0))
        assert np.array_equal(x2, x) and np.array_equal(y2, y)

    def test_duplicate_skipped(self):
        x, y = np.array([[0.0, 1.0], [2.0, 3.0]]), np.array([1, -1])
        x2, y2 = sequential_update(x, y, [[2.0, 3.0], [-0.0, 1.0]], [-1, 1])
        assert x2.shape == (2, 2) and y2.shape == (2,)

    def test_append(self):
        x, y = np.array([[0.0, 1.0]]), np.array([1])
        x2, y2 = sequential_update(x, y, [[5.0, 5.0], [5.0, 5.0]], [-1, -1])
        assert x2.tolist() == [[0.0, 1.0], [5.0, 5.0]] and y2.tolist() == [1, -1]

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            sequential_update(np.zeros((1, 2)), np.ones(1), np.zeros((2, 2)), np.ones(1))
