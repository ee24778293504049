"""Skip-gram word embeddings trained with negative sampling.

Training walks every (center, context) pair inside a sliding window and
takes one SGD step per pair on the sampled objective

    -log s(u_ctx . v_cen) - sum_neg log s(-u_neg . v_cen)

with negatives drawn from the unigram^0.75 corpus distribution. The inner
loop lives in :mod:`cbdetect.kernels`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from cbdetect import kernels
from cbdetect.errors import DataError
from cbdetect.mathops import sigmoid, softplus
from cbdetect.text import PAD_ID, RESERVED_TOKENS, Vocab


@dataclass(frozen=True)
class W2VConfig:
    dim: int = 100
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    learning_rate: float = 0.025
    min_learning_rate: float = 1e-4
    seed: int = 0
    unigram_power: float = 0.75

    def __post_init__(self):
        if self.dim < 1 or self.window < 1 or self.negatives < 1 or self.epochs < 1:
            raise DataError("dim, window, negatives, and epochs must all be >= 1")
        if self.learning_rate <= 0 or self.min_learning_rate <= 0:
            raise DataError("learning rates must be positive")


@dataclass
class EmbeddingMatrix:
    """Learned word vectors: input table, optional output table, vocab."""

    vocab: Vocab
    vectors: np.ndarray  # |V| x dim input vectors, used for lookups
    out_vectors: Optional[np.ndarray] = None
    loss_history: list = field(default_factory=list)  # mean per-pair loss per epoch

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


def _pair_count(n: int, window: int) -> int:
    total = 0
    for i in range(n):
        lo = max(0, i - window)
        hi = min(n, i + window + 1)
        total += hi - lo - 1
    return total


def train_skipgram(corpus: list[list[str]], v: Vocab, cfg: W2VConfig) -> EmbeddingMatrix:
    """Train skip-gram vectors over tokenized sentences.

    The learning rate decays linearly from ``learning_rate`` toward
    ``min_learning_rate`` across all epochs' pairs. Deterministic for a
    fixed seed, independent of the kernel backend's bit-level arithmetic.
    """
    sentences = [np.array(v.to_ids(s), dtype=np.int64) for s in corpus if s]
    pairs_per_epoch = sum(_pair_count(len(s), cfg.window) for s in sentences)
    if pairs_per_epoch == 0:
        raise DataError("corpus has no trainable center/context pair")

    counts = np.array(v.counts, dtype=np.float64)
    neg_ids = np.flatnonzero(counts > 0)
    neg_ids = neg_ids[neg_ids >= len(RESERVED_TOKENS)].astype(np.int64)
    if len(neg_ids) == 0:
        raise DataError("vocabulary has no negative-sampling candidates with corpus counts")
    weights = counts[neg_ids] ** cfg.unigram_power
    neg_cum = np.cumsum(weights)
    neg_cum /= neg_cum[-1]

    rng = np.random.default_rng(cfg.seed)
    vin = (rng.random((len(v), cfg.dim)) - 0.5) / cfg.dim
    vout = np.zeros((len(v), cfg.dim), dtype=np.float64)
    state = kernels.rng_state(cfg.seed)

    total_pairs = cfg.epochs * pairs_per_epoch
    pairs_done = 0
    history = []
    for _ in range(cfg.epochs):
        epoch_loss = 0.0
        for ids in sentences:
            loss, k = kernels.train_sentence_sg(
                vin,
                vout,
                ids,
                cfg.window,
                cfg.negatives,
                cfg.learning_rate,
                cfg.min_learning_rate,
                total_pairs,
                pairs_done,
                neg_cum,
                neg_ids,
                state,
            )
            epoch_loss += loss
            pairs_done += k
        history.append(epoch_loss / pairs_per_epoch)
    return EmbeddingMatrix(vocab=v, vectors=vin, out_vectors=vout, loss_history=history)


def pair_loss(v_cen: np.ndarray, u_ctx: np.ndarray, u_negs: np.ndarray) -> float:
    """Negative-sampling loss for one center/context pair with its negatives."""
    loss = float(softplus(-np.dot(v_cen, u_ctx)))
    for u_n in u_negs:
        loss += float(softplus(np.dot(v_cen, u_n)))
    return loss


def pair_grads(
    v_cen: np.ndarray, u_ctx: np.ndarray, u_negs: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Analytic gradients of :func:`pair_loss` for all three argument groups."""
    f = float(np.dot(v_cen, u_ctx))
    dv = -(1.0 - sigmoid(f)) * u_ctx
    du_ctx = -(1.0 - sigmoid(f)) * v_cen
    du_negs = np.empty_like(u_negs)
    for i, u_n in enumerate(u_negs):
        fn = float(np.dot(v_cen, u_n))
        dv = dv + sigmoid(fn) * u_n
        du_negs[i] = sigmoid(fn) * v_cen
    return dv, du_ctx, du_negs


def embed_word(m: EmbeddingMatrix, token: str) -> np.ndarray:
    """Input vector for a token; unknown tokens get the unk vector."""
    return m.vectors[m.vocab.lookup(token)].copy()


def embed_text(m: EmbeddingMatrix, tokens: list[str]) -> np.ndarray:
    """Mean of token vectors over real (non-pad) tokens; empty -> zeros."""
    ids = [m.vocab.lookup(t) for t in tokens]
    ids = [i for i in ids if i != PAD_ID]
    if not ids:
        return np.zeros(m.dim, dtype=np.float64)
    return m.vectors[ids].mean(axis=0)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def save_embeddings(m: EmbeddingMatrix, path) -> None:
    """Write the input vectors as text: `dim |V|` header, one token per line.

    Floats are written with shortest round-trip repr, so a save/load cycle
    reproduces the matrix bitwise.
    """
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{m.dim} {len(m.vocab)}\n")
        for i, tok in enumerate(m.vocab.id_to_token):
            fh.write(tok + " " + " ".join(repr(float(x)) for x in m.vectors[i]) + "\n")


def load_embeddings(path) -> EmbeddingMatrix:
    """Read the text embedding format back into an EmbeddingMatrix.

    The vocabulary is rebuilt from the token column with zero counts, so a
    loaded matrix supports lookups but not retraining; output vectors are
    not part of the text format.
    """
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise DataError(f"{path}: embedding header must be 'dim vocab_size'")
        try:
            dim, size = int(header[0]), int(header[1])
        except ValueError:
            raise DataError(f"{path}: embedding header must be two integers") from None
        tokens: list[str] = []
        rows = np.empty((size, dim), dtype=np.float64)
        for i, line in enumerate(fh):
            parts = line.rstrip("\n").split(" ")
            if i >= size or len(parts) != dim + 1:
                raise DataError(f"{path}: embedding row {i + 1} malformed")
            tokens.append(parts[0])
            rows[i] = [float(x) for x in parts[1:]]
    if len(tokens) != size:
        raise DataError(f"{path}: expected {size} embedding rows, found {len(tokens)}")
    if tuple(tokens[:3]) != RESERVED_TOKENS:
        raise DataError(f"{path}: embedding vocabulary lacks the reserved-token header")
    token_to_id = {t: i for i, t in enumerate(tokens)}
    if len(token_to_id) != len(tokens):
        raise DataError(f"{path}: duplicate tokens in embedding file")
    vocab = Vocab(id_to_token=tokens, token_to_id=token_to_id, counts=[0] * len(tokens))
    return EmbeddingMatrix(vocab=vocab, vectors=rows, out_vectors=None)
