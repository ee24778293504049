import numpy as np
import pytest

from cbdetect.errors import DataError, NumericError
from cbdetect.models.logistic import (
    LogisticModel,
    logreg_loss_and_grads,
    logreg_probs,
    predict_logreg,
    train_logreg,
)
from oracles import fd_gradient, rel_error
from synth import margin_blobs


class TestGradients:
    def test_match_finite_differences(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(12, 5))
        y = rng.integers(0, 2, size=12).astype(np.float64)
        for l2 in (0.0, 0.3):
            w = rng.normal(size=5)
            b = float(rng.normal())
            _, gw, gb = logreg_loss_and_grads(w, b, X, y, l2)
            fw = fd_gradient(lambda *_: logreg_loss_and_grads(w, b, X, y, l2)[0], w)
            assert rel_error(gw, fw) <= 1e-6
            barr = np.array([b])
            fb = fd_gradient(
                lambda *_: logreg_loss_and_grads(w, float(barr[0]), X, y, l2)[0], barr
            )
            assert rel_error(np.array([gb]), fb) <= 1e-6

    def test_loss_at_zero_weights(self):
        X = np.zeros((4, 2))
        y = np.array([0.0, 1.0, 0.0, 1.0])
        loss, gw, gb = logreg_loss_and_grads(np.zeros(2), 0.0, X, y)
        assert loss == pytest.approx(np.log(2.0))
        assert gb == pytest.approx(0.0)


class TestTraining:
    def test_loss_decreases(self):
        X, y = margin_blobs(60, dim=3, gap=2.0, seed=1)
        m = train_logreg(X, y, epochs=50)
        assert m.loss_history[-1] < m.loss_history[0]

    def test_separable_data_reaches_full_accuracy(self):
        X, y = margin_blobs(100, dim=4, gap=4.0, seed=2)
        m = train_logreg(X, y, learning_rate=0.1, epochs=300)
        pred = (logreg_probs(m, X) >= 0.5).astype(int)
        assert np.array_equal(pred, y)

    def test_l2_shrinks_weight_norm(self):
        X, y = margin_blobs(80, dim=4, gap=3.0, seed=3)
        free = train_logreg(X, y, epochs=200, l2=0.0)
        tied = train_logreg(X, y, epochs=200, l2=1.0)
        assert np.linalg.norm(tied.w) < np.linalg.norm(free.w)

    def test_deterministic(self):
        X, y = margin_blobs(40, seed=4)
        a = train_logreg(X, y, epochs=30)
        b = train_logreg(X, y, epochs=30)
        assert np.array_equal(a.w, b.w) and a.b == b.b

    def test_exploding_rate_raises_numeric_error(self):
        X, y = margin_blobs(40, seed=5)
        with pytest.raises(NumericError):
            train_logreg(X, y, learning_rate=1e200, epochs=10)

    def test_shape_mismatch_raises(self):
        with pytest.raises(DataError):
            train_logreg(np.zeros((3, 2)), np.zeros(4))
        with pytest.raises(DataError):
            train_logreg(np.zeros((3, 2)), np.zeros(3), l2=-1.0)


class TestPrediction:
    def test_tie_at_half_goes_to_class_one(self):
        m = LogisticModel(w=np.zeros(2), b=0.0)
        prob, label = predict_logreg(m, np.array([1.0, 1.0]))
        assert prob == 0.5 and label == 1

    def test_prob_matches_sigmoid_of_decision(self):
        m = LogisticModel(w=np.array([2.0, -1.0]), b=0.5)
        x = np.array([1.0, 3.0])
        prob, label = predict_logreg(m, x)
        assert prob == pytest.approx(1.0 / (1.0 + np.exp(-(2.0 - 3.0 + 0.5))))
        assert label == 0

    def test_feature_width_checked(self):
        m = LogisticModel(w=np.zeros(3), b=0.0)
        with pytest.raises(DataError):
            logreg_probs(m, np.zeros((2, 4)))
