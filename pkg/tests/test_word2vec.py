import math

import numpy as np
import pytest

from cbdetect.errors import DataError
from cbdetect.text import UNK_ID, build_vocab, vocab_from_text
from cbdetect.word2vec import (
    EmbeddingMatrix,
    W2VConfig,
    _pair_count,
    cosine,
    embed_text,
    embed_word,
    load_embeddings,
    pair_grads,
    pair_loss,
    save_embeddings,
    train_skipgram,
)
from oracles import fd_gradient, rel_error


def toy_corpus():
    a = ["the", "cat", "and", "the", "dog", "play"]
    b = ["a", "cat", "saw", "a", "dog", "run"]
    c = ["the", "economy", "grew", "this", "year"]
    d = ["a", "weak", "economy", "slows", "trade"]
    return [a, b, a, c, b, d, a, c, b, d] * 6


class TestPairCount:
    @pytest.mark.parametrize("n,window", [(1, 5), (2, 1), (5, 2), (8, 3), (10, 20)])
    def test_matches_enumeration(self, n, window):
        brute = sum(
            1
            for i in range(n)
            for j in range(max(0, i - window), min(n, i + window + 1))
            if j != i
        )
        assert _pair_count(n, window) == brute


class TestPairMath:
    def test_loss_at_zero_vectors(self):
        z = np.zeros(4)
        negs = np.zeros((3, 4))
        assert pair_loss(z, z, negs) == pytest.approx(4 * math.log(2.0), rel=1e-12)

    def test_grads_match_finite_differences(self):
        rng = np.random.default_rng(3)
        for _ in range(5):
            v = rng.normal(size=8)
            u = rng.normal(size=8)
            negs = rng.normal(size=(4, 8))
            dv, du, dn = pair_grads(v, u, negs)
            assert rel_error(dv, fd_gradient(lambda *_: pair_loss(v, u, negs), v)) <= 1e-5
            assert rel_error(du, fd_gradient(lambda *_: pair_loss(v, u, negs), u)) <= 1e-5
            assert rel_error(dn, fd_gradient(lambda *_: pair_loss(v, u, negs), negs)) <= 1e-5


class TestTraining:
    def test_loss_decreases(self):
        corpus = toy_corpus()
        v = build_vocab(corpus)
        m = train_skipgram(corpus, v, W2VConfig(dim=16, window=2, epochs=8, seed=1))
        assert len(m.loss_history) == 8
        assert m.loss_history[-1] < m.loss_history[0]

    def test_cooccurring_words_end_up_closer(self):
        corpus = toy_corpus()
        v = build_vocab(corpus)
        m = train_skipgram(corpus, v, W2VConfig(dim=16, window=2, epochs=20, seed=0))
        cat_dog = cosine(embed_word(m, "cat"), embed_word(m, "dog"))
        cat_eco = cosine(embed_word(m, "cat"), embed_word(m, "economy"))
        assert cat_dog > cat_eco

    def test_bitwise_determinism(self):
        corpus = toy_corpus()
        v = build_vocab(corpus)
        cfg = W2VConfig(dim=12, window=2, epochs=3, seed=7)
        m1 = train_skipgram(corpus, v, cfg)
        m2 = train_skipgram(corpus, v, cfg)
        assert np.array_equal(m1.vectors, m2.vectors)
        assert np.array_equal(m1.out_vectors, m2.out_vectors)
        assert m1.loss_history == m2.loss_history

    def test_seed_changes_vectors(self):
        corpus = toy_corpus()
        v = build_vocab(corpus)
        m1 = train_skipgram(corpus, v, W2VConfig(dim=12, window=2, epochs=2, seed=0))
        m2 = train_skipgram(corpus, v, W2VConfig(dim=12, window=2, epochs=2, seed=1))
        assert not np.array_equal(m1.vectors, m2.vectors)

    def test_no_pairs_raises(self):
        corpus = [["solo"], ["alone"]]
        v = build_vocab(corpus)
        with pytest.raises(DataError):
            train_skipgram(corpus, v, W2VConfig(dim=4))

    def test_zero_count_vocab_has_no_negative_candidates(self):
        # a vocab restored from text carries no counts to weight draws with
        v = vocab_from_text("<pad>\n<unk>\n<mask>\ncat\ndog\n")
        with pytest.raises(DataError, match="negative-sampling"):
            train_skipgram([["cat", "dog", "cat"]], v, W2VConfig(dim=4))

    def test_config_validation(self):
        with pytest.raises(DataError):
            W2VConfig(dim=0)
        with pytest.raises(DataError):
            W2VConfig(learning_rate=0.0)


def tiny_matrix():
    v = build_vocab([["left", "right"]])
    vecs = np.zeros((len(v), 2))
    vecs[v.lookup("left")] = (1.0, 0.0)
    vecs[v.lookup("right")] = (0.0, 1.0)
    vecs[UNK_ID] = (5.0, 5.0)
    return EmbeddingMatrix(vocab=v, vectors=vecs)


class TestLookups:
    def test_embed_word_unknown_uses_unk_vector(self):
        m = tiny_matrix()
        assert np.array_equal(embed_word(m, "never-seen"), [5.0, 5.0])

    def test_embed_text_is_mean_of_token_vectors(self):
        m = tiny_matrix()
        assert np.array_equal(embed_text(m, ["left", "right"]), [0.5, 0.5])

    def test_embed_text_empty_is_zeros(self):
        m = tiny_matrix()
        assert np.array_equal(embed_text(m, []), [0.0, 0.0])

    def test_cosine_zero_vector(self):
        assert cosine(np.zeros(3), np.ones(3)) == 0.0
        assert cosine(np.ones(3), np.ones(3)) == pytest.approx(1.0)


class TestPersistence:
    def test_round_trip_is_bitwise(self, tmp_path):
        corpus = toy_corpus()
        v = build_vocab(corpus)
        m = train_skipgram(corpus, v, W2VConfig(dim=8, window=2, epochs=2, seed=2))
        path = tmp_path / "vecs.txt"
        save_embeddings(m, path)
        back = load_embeddings(path)
        assert back.vocab.id_to_token == m.vocab.id_to_token
        assert np.array_equal(back.vectors, m.vectors)

    def test_header_records_dim_and_size(self, tmp_path):
        m = tiny_matrix()
        path = tmp_path / "vecs.txt"
        save_embeddings(m, path)
        first = path.read_text(encoding="utf-8").splitlines()[0]
        assert first == f"2 {len(m.vocab)}"

    @pytest.mark.parametrize(
        "text",
        [
            "not-a-header\n",
            "x y\n",
            "2 2\n<pad> 0.0 0.0\n",  # row count short of header
            "2 1\n<pad> 0.0\n",  # row width disagrees with dim
        ],
    )
    def test_malformed_files_raise(self, tmp_path, text):
        path = tmp_path / "bad.txt"
        path.write_text(text, encoding="utf-8")
        with pytest.raises(DataError):
            load_embeddings(path)

    def test_missing_reserved_header_raises(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("1 3\na 0.0\nb 1.0\nc 2.0\n", encoding="utf-8")
        with pytest.raises(DataError, match="reserved"):
            load_embeddings(path)
