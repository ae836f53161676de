import numpy as np
import pytest

from corpusctl.agenet import (
    EmbeddingSample,
    EvalMetrics,
    SoftmaxModel,
    evaluate,
    grad_check,
    loss_value,
    softmax,
    stratified_split,
    train,
)
from corpusctl.errors import ValidationError


def gaussian_classes(n_classes, per_class, dim, separation=6.0, sigma=0.5, seed=0, year0=2006):
    rng = np.random.default_rng(seed)
    centers = rng.normal(0.0, 1.0, size=(n_classes, dim))
    centers *= separation / np.linalg.norm(centers, axis=1, keepdims=True)
    samples = []
    for k in range(n_classes):
        for _ in range(per_class):
            samples.append(
                EmbeddingSample(centers[k] + rng.normal(0, sigma, size=dim), year0 + k)
            )
    return samples


def two_blob_data(seed=1):
    rng = np.random.default_rng(seed)
    samples = []
    for _ in range(40):
        samples.append(EmbeddingSample(np.array([2.0, 2.0]) + rng.normal(0, 0.3, 2), 2006))
        samples.append(EmbeddingSample(np.array([-2.0, -2.0]) + rng.normal(0, 0.3, 2), 2007))
    return samples


def perceptron_separable(samples, epochs=200) -> bool:
    """Independent check that the fixture really is linearly separable."""
    w = np.zeros(len(samples[0].vector) + 1)
    data = [
        (np.append(s.vector, 1.0), 1.0 if s.year == 2006 else -1.0) for s in samples
    ]
    for _ in range(epochs):
        mistakes = 0
        for x, label in data:
            if label * (w @ x) <= 0:
                w += label * x
                mistakes += 1
        if mistakes == 0:
            return True
    return False


class TestTrain:
    def test_separable_two_class_reaches_perfect_accuracy(self):
        samples = two_blob_data()
        assert perceptron_separable(samples)
        model, trace = train(samples, learning_rate=0.5, epochs=500, l2=0.0, seed=0)
        metrics = evaluate(model, samples)
        assert metrics.accuracy == 1.0

    def test_loss_trace_non_increasing(self):
        samples = gaussian_classes(4, 15, 6, seed=3)
        _, trace = train(samples, learning_rate=2.0, epochs=100, seed=1)
        for prev, cur in zip(trace, trace[1:]):
            assert cur <= prev + 1e-12

    def test_weight_norm_shrinks_with_growing_l2(self):
        samples = gaussian_classes(3, 20, 4, seed=4)
        norms = []
        for l2 in (0.0, 0.01, 0.1, 1.0, 10.0):
            model, _ = train(samples, learning_rate=0.5, epochs=200, l2=l2, seed=2)
            norms.append(float(np.linalg.norm(model.weights)))
        assert norms == sorted(norms, reverse=True)

    def test_sixteen_class_macro_f1(self):
        samples = gaussian_classes(16, 30, 24, seed=5)
        train_set, test_set = stratified_split(samples, 0.2, seed=0)
        model, _ = train(train_set, learning_rate=1.0, epochs=400, l2=1e-4, seed=0)
        metrics = evaluate(model, test_set)
        assert metrics.macro_f1 >= 0.9
        assert metrics.r_squared >= 0.9

    def test_deterministic_given_seed(self):
        samples = gaussian_classes(3, 10, 4, seed=6)
        a, trace_a = train(samples, epochs=50, seed=9)
        b, trace_b = train(samples, epochs=50, seed=9)
        assert np.array_equal(a.weights, b.weights)
        assert trace_a == trace_b

    def test_missing_class_would_be_rejected(self):
        with pytest.raises(ValidationError):
            train([], epochs=10)


class TestEvaluate:
    def test_perfect_predictions(self):
        samples = two_blob_data()
        model, _ = train(samples, epochs=500, seed=0)
        metrics = evaluate(model, samples)
        assert metrics.macro_f1 == 1.0
        assert metrics.r_squared == 1.0

    def test_constant_prediction_at_mean_year_gives_zero_r2(self):
        # symmetric data around 2007; model stuck on the middle class
        model = SoftmaxModel(
            weights=np.zeros((3, 2)),
            bias=np.array([0.0, 10.0, 0.0]),
            class_years=(2006, 2007, 2008),
        )
        samples = [
            EmbeddingSample(np.array([1.0, 0.0]), 2006),
            EmbeddingSample(np.array([0.0, 1.0]), 2008),
            EmbeddingSample(np.array([1.0, 1.0]), 2006),
            EmbeddingSample(np.array([-1.0, 1.0]), 2008),
        ]
        metrics = evaluate(model, samples)
        assert metrics.r_squared == 0.0

    def test_macro_f1_hand_computed_confusion(self):
        # true [2006, 2006, 2007, 2007], predicted [2006, 2007, 2007, 2007]
        # F1(2006) = 2/3, F1(2007) = 4/5 -> macro 0.7333...
        model = SoftmaxModel(
            weights=np.array([[1.0], [-1.0]]),
            bias=np.array([0.0, 0.0]),
            class_years=(2006, 2007),
        )
        samples = [
            EmbeddingSample(np.array([1.0]), 2006),
            EmbeddingSample(np.array([-1.0]), 2006),
            EmbeddingSample(np.array([-1.0]), 2007),
            EmbeddingSample(np.array([-1.0]), 2007),
        ]
        metrics = evaluate(model, samples)
        assert metrics.macro_f1 == pytest.approx((2 / 3 + 4 / 5) / 2)

    def test_empty_rejected(self):
        model = SoftmaxModel(np.zeros((2, 2)), np.zeros(2), (2006, 2007))
        with pytest.raises(ValidationError):
            evaluate(model, [])


class TestGradCheck:
    def random_config(self, rng):
        n_classes = int(rng.integers(2, 6))
        dim = int(rng.integers(1, 8))
        samples = [
            EmbeddingSample(rng.normal(size=dim), 2006 + int(rng.integers(0, n_classes)))
            for _ in range(int(rng.integers(n_classes, 30)))
        ]
        years = tuple(sorted({s.year for s in samples}))
        model = SoftmaxModel(
            weights=rng.normal(size=(len(years), dim)),
            bias=rng.normal(size=len(years)),
            class_years=years,
        )
        return model, samples

    def test_twenty_random_configurations(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            model, samples = self.random_config(rng)
            assert grad_check(model, samples, epsilon=1e-5) < 1e-4

    def test_zero_weight_closed_form_bias_gradient(self):
        # at W=0, b=0 the softmax is uniform; the bias gradient is
        # uniform - mean(one-hot)
        samples = [
            EmbeddingSample(np.array([1.0, 2.0]), 2006),
            EmbeddingSample(np.array([-1.0, 0.5]), 2007),
            EmbeddingSample(np.array([0.0, -2.0]), 2007),
        ]
        model = SoftmaxModel(np.zeros((2, 2)), np.zeros(2), (2006, 2007))
        eps = 1e-6
        for k, expected in enumerate([1 / 2 - 1 / 3, 1 / 2 - 2 / 3]):
            up = model.bias.copy()
            up[k] += eps
            down = model.bias.copy()
            down[k] -= eps
            numeric = (
                loss_value(SoftmaxModel(model.weights, up, model.class_years), samples)
                - loss_value(SoftmaxModel(model.weights, down, model.class_years), samples)
            ) / (2 * eps)
            assert numeric == pytest.approx(expected, abs=1e-6)
        assert grad_check(model, samples) < 1e-4

    def test_corrupted_gradient_fails_loudly(self):
        # negative control: a wrong analytic gradient must not pass the
        # tolerance the real one is held to
        rng = np.random.default_rng(7)
        model, samples = self.random_config(rng)
        from corpusctl import agenet

        original = agenet._loss_and_grads

        def corrupted(w, b, x, y, l2):
            loss, gw, gb = original(w, b, x, y, l2)
            gw = gw.copy()
            gw[0, 0] += 1.0
            return loss, gw, gb

        agenet._loss_and_grads = corrupted
        try:
            error = grad_check(model, samples, epsilon=1e-5)
        finally:
            agenet._loss_and_grads = original
        assert error > 0.01


class TestSoftmaxProperties:
    def test_rows_sum_to_one_within_1e12(self):
        rng = np.random.default_rng(15)
        logits = rng.normal(0, 50, size=(200, 9))
        sums = softmax(logits).sum(axis=1)
        assert np.all(np.abs(sums - 1.0) < 1e-12)

    def test_logit_shift_leaves_argmax_unchanged(self):
        rng = np.random.default_rng(16)
        logits = rng.normal(size=(50, 5))
        shifted = logits + rng.normal()  # same constant for every class
        assert np.array_equal(np.argmax(softmax(logits), 1), np.argmax(softmax(shifted), 1))

    def test_loss_is_convex_at_midpoints(self):
        rng = np.random.default_rng(17)
        samples = gaussian_classes(3, 10, 4, seed=8)
        years = (2006, 2007, 2008)
        for _ in range(30):
            w1, w2 = rng.normal(size=(2, 3, 4))
            b1, b2 = rng.normal(size=(2, 3))
            mid = SoftmaxModel((w1 + w2) / 2, (b1 + b2) / 2, years)
            left = SoftmaxModel(w1, b1, years)
            right = SoftmaxModel(w2, b2, years)
            l2 = 0.01
            assert loss_value(mid, samples, l2) <= (
                loss_value(left, samples, l2) + loss_value(right, samples, l2)
            ) / 2 + 1e-9


class TestStratifiedSplit:
    def test_every_class_keeps_a_training_sample(self):
        samples = gaussian_classes(5, 3, 2, seed=9)
        train_set, test_set = stratified_split(samples, 0.4, seed=1)
        train_years = {s.year for s in train_set}
        assert train_years == {2006 + k for k in range(5)}
        assert len(train_set) + len(test_set) == len(samples)

    def test_split_fraction_roughly_honored(self):
        samples = gaussian_classes(4, 50, 2, seed=10)
        train_set, test_set = stratified_split(samples, 0.2, seed=2)
        assert len(test_set) == 40
