import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from accel_eval import featuremap
from accel_eval.classifier import (
    Hyperplane,
    decision_function,
    design_grid,
    design_uniform,
    predict,
    train_linear,
)
from accel_eval.exceptions import TrainingError
from accel_eval.scenarios import toy_scenario

# Optimal objective of the standardized, augmented-bias soft-margin problem on
# the seed-0 toy design (1000 uniform points, degree-2 features), from an
# interior-point QP solve at 1e-10 gap.
QP_OPTIMUM = {1.0: 74.34808525527563, 10.0: 574.2864247785069}


def toy_design(seed, count=1000):
    sc = toy_scenario()
    x = design_uniform(sc.lower, sc.upper, count, np.random.default_rng(seed))
    y = np.where(sc.indicator(x) == 1, 1, -1)
    return featuremap.apply(featuremap.build_map(2, 2), x), y


class TestDesigns:
    def test_grid_corners(self):
        g = design_grid([0, 0], [1, 1], (2, 2))
        assert sorted(map(tuple, g.tolist())) == [(0, 0), (0, 1), (1, 0), (1, 1)]

    def test_grid_spacing(self):
        g = design_grid([0, 0], [5, 5], (3, 3))
        assert g.shape == (9, 2)
        assert sorted(set(g[:, 0].tolist())) == [0.0, 2.5, 5.0]

    def test_grid_large(self):
        g = design_grid([0, 0], [5, 5], (100, 100))
        assert g.shape == (10_000, 2)
        assert g.min(axis=0).tolist() == [0, 0] and g.max(axis=0).tolist() == [5, 5]

    def test_grid_errors(self):
        with pytest.raises(ValueError):
            design_grid([0, 1], [1, 1], (3, 3))
        with pytest.raises(ValueError):
            design_grid([0, 0], [1, 1], (1, 3))

    def test_uniform_thin_box(self, rng):
        # 2 + 1e-12 itself rounds to 2 + 1.00009e-12, so check against the bounds
        x = design_uniform([0, 2], [1, 2 + 1e-12], 100, rng)
        assert np.all((x[:, 1] >= 2) & (x[:, 1] <= 2 + 1e-12))
        assert np.all(np.abs(x[:, 1] - 2) <= 1.0001e-12)

    def test_uniform_mean(self, rng):
        x = design_uniform([0, 0], [5, 5], 100_000, rng)
        assert np.all(np.abs(x.mean(axis=0) - 2.5) < 0.02)

    def test_uniform_deterministic(self):
        a = design_uniform([0, 0], [5, 5], 10, np.random.default_rng(3))
        b = design_uniform([0, 0], [5, 5], 10, np.random.default_rng(3))
        assert np.array_equal(a, b)

    def test_uniform_empty_domain(self, rng):
        with pytest.raises(ValueError):
            design_uniform([0, 0], [0, 1], 5, rng)


class TestPredict:
    def test_examples(self):
        h = Hyperplane([1.0, 0.0], 0.0)
        assert predict(h, [0.5, 9.0]) == 1
        assert predict(h, [0.0, 0.0]) == 1
        assert predict(Hyperplane([-2.0, 1.0], 3.0), [4.0, 1.0]) == -1

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            predict(Hyperplane([1.0, 0.0], 0.0), [1.0, 2.0, 3.0])

    def test_zero_normal_rejected(self):
        with pytest.raises(ValueError):
            Hyperplane([0.0, 0.0], 1.0)

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), c=st.floats(1e-3, 1e3))
    def test_positive_scaling_invariance(self, seed, c):
        rng = np.random.default_rng(seed)
        h = Hyperplane(rng.normal(size=4), float(rng.normal()))
        z = rng.normal(size=(30, 4))
        assert np.array_equal(predict(h, z), predict(h.scaled(c), z))


class TestTrain:
    def test_one_dimensional_separable(self, rng):
        h = train_linear([[-1.0], [1.0]], [-1, 1], penalty=1e4, rng=rng)
        assert h.beta[0] > 0
        assert -1.0 < -h.b / h.beta[0] < 1.0

    def test_single_class(self, rng):
        with pytest.raises(TrainingError):
            train_linear([[0.0], [1.0]], [1, 1], rng=rng)

    def test_non_finite(self, rng):
        with pytest.raises(ValueError):
            train_linear([[0.0], [np.nan]], [1, -1], rng=rng)

    def test_bad_labels(self, rng):
        with pytest.raises(ValueError):
            train_linear([[0.0], [1.0]], [0, 1], rng=rng)

    @pytest.mark.parametrize("penalty", [1.0, 10.0])
    def test_near_qp_optimum(self, penalty):
        z, y = toy_design(0)
        h = train_linear(z, y, penalty=penalty, rng=np.random.default_rng(1))
        assert h.objective[-1] <= QP_OPTIMUM[penalty] * (1 + 1e-3)
        assert h.objective[-1] >= QP_OPTIMUM[penalty] * (1 - 1e-9)

    def test_objective_history_non_increasing(self):
        z, y = toy_design(0)
        h = train_linear(z, y, rng=np.random.default_rng(1))
        assert np.all(np.diff(h.objective) <= 0)

    def test_toy_recall(self):
        z, y = toy_design(0)
        h = train_linear(z, y, rng=np.random.default_rng(0))
        pos = y == 1
        assert np.mean(predict(h, z[pos]) == 1) >= 0.9

    def test_orientation(self):
        z, y = toy_design(5)
        h = train_linear(z, y, rng=np.random.default_rng(0))
        d = decision_function(h, z)
        assert d[y == 1].mean() > d[y == -1].mean()

    def test_scaling_features_keeps_labels(self):
        z, y = toy_design(2, count=300)
        a = train_linear(z, y, rng=np.random.default_rng(4))
        b = train_linear(2 * z, y, rng=np.random.default_rng(4))
        assert np.array_equal(predict(a, z), predict(b, 2 * z))

    def test_separable_reaches_full_accuracy(self):
        for seed in range(20):
            rng = np.random.default_rng(seed)
            m = int(rng.integers(2, 6))
            normal = rng.normal(size=m)
            normal /= np.linalg.norm(normal)
            z = rng.uniform(-3, 3, size=(int(rng.integers(10, 201)), m))
            d = z @ normal + 0.2
            keep = np.abs(d) >= 0.1
            z, y = z[keep], np.where(d[keep] > 0, 1, -1)
            if len(set(y.tolist())) < 2:
                continue
            h = train_linear(z, y, penalty=100.0, max_epochs=5000, rng=rng)
            assert np.array_equal(predict(h, z), y), seed

    def test_deterministic(self):
        z, y = toy_design(1, count=200)
        a = train_linear(z, y, rng=np.random.default_rng(9))
        b = train_linear(z, y, rng=np.random.default_rng(9))
        assert np.array_equal(a.beta, b.beta) and a.b == b.b
