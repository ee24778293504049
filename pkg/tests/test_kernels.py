import numpy as np
import pytest

import cbdetect.kernels.reference as reference
from oracles import naive_best_split

try:
    from cbdetect.kernels import _speedups
except ImportError:
    _speedups = None

# published test vectors for the splitmix64 stream seeded with 0
SPLITMIX64_SEED0 = (0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F)


class TestRng:
    def test_known_answer_seed0(self, backend):
        state = backend.rng_state(0)
        assert tuple(backend.rng_next(state) for _ in range(3)) == SPLITMIX64_SEED0

    def test_uniform_range_and_determinism(self, backend):
        s1, s2 = backend.rng_state(123), backend.rng_state(123)
        a = [backend.rng_uniform(s1) for _ in range(500)]
        b = [backend.rng_uniform(s2) for _ in range(500)]
        assert a == b
        assert all(0.0 <= u < 1.0 for u in a)

    def test_streams_differ_by_seed(self, backend):
        a = backend.rng_uniform(backend.rng_state(1))
        b = backend.rng_uniform(backend.rng_state(2))
        assert a != b


class TestSampleNegatives:
    def test_draws_follow_cumulative_table(self, backend):
        # two-token table split 50/50: the draw index is just u < 0.5 or not
        cum = np.array([0.5, 1.0])
        state = backend.rng_state(7)
        probe = backend.rng_state(7)
        expected = []
        for _ in range(200):
            u = backend.rng_uniform(probe)
            expected.append(0 if u < 0.5 else 1)
        got = list(backend.sample_negatives(state, cum, 200))
        assert got == expected

    def test_empirical_frequencies_match_weights(self, backend):
        # one million draws; each token's frequency lands within 1% of its
        # smoothed-unigram probability (deterministic stream, so no flake)
        weights = np.array([1.0, 2.0, 4.0, 8.0, 16.0])
        probs = weights / weights.sum()
        cum = np.cumsum(probs)
        state = backend.rng_state(99)
        draws = np.asarray(backend.sample_negatives(state, cum, 1_000_000))
        freq = np.bincount(draws, minlength=5) / 1_000_000
        assert np.max(np.abs(freq - probs) / probs) < 0.01


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


class TestTrainSentence:
    def _setup(self, backend, seed=5, vocab=30, dim=8, sentence=(3, 4, 5, 6, 7)):
        rng = np.random.default_rng(seed)
        vin = (rng.random((vocab, dim)) - 0.5) / dim
        vout = rng.normal(0, 0.01, size=(vocab, dim))
        counts = np.zeros(vocab)
        counts[3:] = rng.integers(1, 20, size=vocab - 3)
        weights = counts[3:] ** 0.75
        neg_cum = np.cumsum(weights / weights.sum())
        neg_ids = np.arange(3, vocab, dtype=np.int64)
        ids = np.array(sentence, dtype=np.int64)
        state = backend.rng_state(seed)
        return vin, vout, ids, neg_cum, neg_ids, state

    def test_pair_count_matches_window_formula(self, backend):
        vin, vout, ids, neg_cum, neg_ids, state = self._setup(backend)
        n = len(ids)
        window = 2
        loss, pairs = backend.train_sentence_sg(
            vin, vout, ids, window, 3, 0.025, 1e-4, 10_000, 0, neg_cum, neg_ids, state
        )
        expected = sum(min(n - 1, i + window) - max(0, i - window) for i in range(n))
        assert pairs == expected
        assert np.isfinite(loss)

    def test_mutates_both_matrices(self, backend):
        vin, vout, ids, neg_cum, neg_ids, state = self._setup(backend)
        before_in, before_out = vin.copy(), vout.copy()
        backend.train_sentence_sg(vin, vout, ids, 2, 3, 0.025, 1e-4, 10_000, 0, neg_cum, neg_ids, state)
        assert not np.array_equal(vin, before_in)
        assert not np.array_equal(vout, before_out)

    def test_single_pair_update_matches_manual_sgd(self, backend):
        """Replay one skip-gram pair by hand: same negatives, same formulas."""
        vin, vout, ids, neg_cum, neg_ids, state = self._setup(backend, sentence=(3, 9))
        vin0, vout0 = vin.copy(), vout.copy()
        negatives, alpha0, alpha_min, total = 4, 0.025, 1e-4, 100

        # replicate the negative draws the kernel will consume for pair 1
        probe = backend.rng_state(5)
        draws_p1 = [neg_ids[i] for i in backend.sample_negatives(probe, neg_cum, negatives)]

        backend.train_sentence_sg(vin, vout, ids, 5, negatives, alpha0, alpha_min, total, 0, neg_cum, neg_ids, state)

        center, ctx = 3, 9
        alpha = alpha0 + (alpha_min - alpha0) * (0 / total)
        v = vin0[center].copy()
        accum = np.zeros_like(v)
        g = (1.0 - _sigmoid(np.dot(vout0[ctx], v))) * alpha
        accum += g * vout0[ctx]
        exp_out = {ctx: vout0[ctx] + g * v}
        for neg in draws_p1:
            if neg == ctx:
                continue
            u = exp_out.get(neg, vout0[neg])
            gn = -_sigmoid(np.dot(u, v)) * alpha
            accum += gn * u
            exp_out[neg] = u + gn * v
        expected_center = v + accum
        assert np.allclose(vin[center], expected_center, rtol=1e-12, atol=1e-15)
        for token, row in exp_out.items():
            assert np.allclose(vout[token], row, rtol=1e-12, atol=1e-15)

    def test_learning_rate_floor(self, backend):
        # pairs_done beyond total keeps alpha at the floor rather than negative
        vin, vout, ids, neg_cum, neg_ids, state = self._setup(backend, sentence=(3, 4))
        vin0 = vin.copy()
        backend.train_sentence_sg(vin, vout, ids, 1, 1, 0.025, 1e-4, 10, 10_000, neg_cum, neg_ids, state)
        delta = np.abs(vin - vin0).max()
        assert 0 < delta < 0.01  # tiny step, not a runaway negative rate

    def test_backend_determinism(self, backend):
        a = self._setup(backend)
        b = self._setup(backend)
        la = backend.train_sentence_sg(a[0], a[1], a[2], 3, 5, 0.025, 1e-4, 1000, 0, a[3], a[4], a[5])
        lb = backend.train_sentence_sg(b[0], b[1], b[2], 3, 5, 0.025, 1e-4, 1000, 0, b[3], b[4], b[5])
        assert la == lb
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


@pytest.mark.skipif(_speedups is None, reason="compiled backend unavailable")
class TestBackendAgreement:
    def test_train_sentence_cross_backend(self):
        rng = np.random.default_rng(17)
        vocab, dim = 50, 12
        ids = rng.integers(3, vocab, size=40).astype(np.int64)
        counts = rng.integers(1, 30, size=vocab).astype(np.float64)
        counts[:3] = 0
        w = counts[3:] ** 0.75
        neg_cum = np.cumsum(w / w.sum())
        neg_ids = np.arange(3, vocab, dtype=np.int64)

        results = []
        for impl in (reference, _speedups):
            vin = (np.random.default_rng(2).random((vocab, dim)) - 0.5) / dim
            vout = np.zeros((vocab, dim))
            state = impl.rng_state(11)
            loss, pairs = impl.train_sentence_sg(vin, vout, ids, 4, 5, 0.025, 1e-4, 5000, 0, neg_cum, neg_ids, state)
            results.append((loss, pairs, vin, vout))
        (l1, p1, vin1, vout1), (l2, p2, vin2, vout2) = results
        assert p1 == p2
        # BLAS dot products vs plain C loops: same math, not the same
        # rounding, so agreement is tight allclose rather than bitwise
        assert np.isclose(l1, l2, rtol=1e-10, atol=1e-12)
        assert np.allclose(vin1, vin2, rtol=1e-9, atol=1e-12)
        assert np.allclose(vout1, vout2, rtol=1e-9, atol=1e-12)

    def test_best_split_cross_backend(self):
        rng = np.random.default_rng(23)
        for _ in range(50):
            n = int(rng.integers(4, 80))
            values = np.sort(rng.choice([0.0, 0.5, 1.0, 2.0, 3.0], size=n))
            labels = rng.integers(0, 2, size=n).astype(np.int64)
            min_leaf = int(rng.integers(1, 3))
            assert reference.best_split(values, labels, min_leaf) == _speedups.best_split(values, labels, min_leaf)


class TestBestSplit:
    def test_matches_naive_oracle(self, backend):
        rng = np.random.default_rng(31)
        for _ in range(120):
            n = int(rng.integers(2, 60))
            if rng.random() < 0.5:
                values = np.sort(rng.normal(size=n))
            else:
                values = np.sort(rng.choice([0.0, 1.0, 2.0], size=n))
            labels = rng.integers(0, 2, size=n).astype(np.int64)
            min_leaf = int(rng.integers(1, max(2, n // 2)))
            pos, score = backend.best_split(values, labels, min_leaf)
            opos, oscore = naive_best_split(values.tolist(), labels.tolist(), min_leaf)
            assert pos == opos
            if pos >= 0:
                assert abs(score - oscore) < 1e-12

    def test_no_boundary_returns_sentinel(self, backend):
        values = np.array([1.0, 1.0, 1.0, 1.0])
        labels = np.array([0, 1, 0, 1], dtype=np.int64)
        assert backend.best_split(values, labels, 1) == (-1, np.inf)

    def test_clean_separation_scores_zero(self, backend):
        values = np.array([0.0, 1.0, 2.0, 3.0])
        labels = np.array([0, 0, 1, 1], dtype=np.int64)
        pos, score = backend.best_split(values, labels, 1)
        assert pos == 2
        assert score == 0.0

    def test_tie_takes_smallest_position(self, backend):
        # symmetric labels: positions 1 and 3 tie; 2 is worse
        values = np.array([0.0, 1.0, 2.0, 3.0])
        labels = np.array([0, 1, 0, 1], dtype=np.int64)
        pos, _ = backend.best_split(values, labels, 1)
        opos, _ = naive_best_split(values.tolist(), labels.tolist(), 1)
        assert pos == opos
