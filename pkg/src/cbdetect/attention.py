"""Small self-attention text encoder with masked-token pretraining.

A stack of post-layer-norm residual blocks: multi-head scaled dot-product
attention followed by a position-wise feedforward, over learned token and
position embeddings. Padded positions get -inf attention scores, so their
softmax weight is exactly zero. Pretraining predicts randomly masked
tokens with a cross-entropy head; every gradient is derived by hand and
checkable against finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from cbdetect.errors import DataError, NumericError
from cbdetect.optim import Adam
from cbdetect.text import MASK_ID, EncodedText, Vocab, encode

LN_EPS = 1e-5


@dataclass(frozen=True)
class EncoderConfig:
    dim: int = 64
    heads: int = 4
    layers: int = 2
    ffn_dim: int = 256
    max_len: int = 180
    mask_prob: float = 0.15
    seed: int = 0
    learning_rate: float = 1e-3
    epochs: int = 5

    def __post_init__(self):
        if self.dim < 1 or self.layers < 1 or self.ffn_dim < 1:
            raise DataError("dim, layers, and ffn_dim must all be >= 1")
        if self.heads < 1 or self.dim % self.heads != 0:
            raise DataError(f"heads must divide dim, got dim={self.dim} heads={self.heads}")
        if self.max_len < 1:
            raise DataError("max_len must be >= 1")
        if not (0.0 < self.mask_prob < 1.0):
            raise DataError("mask_prob must lie in (0, 1)")
        if self.learning_rate <= 0 or self.epochs < 1:
            raise DataError("learning_rate must be positive and epochs >= 1")


@dataclass
class LayerParams:
    wq: np.ndarray
    wk: np.ndarray
    wv: np.ndarray
    wo: np.ndarray
    ln1_g: np.ndarray
    ln1_b: np.ndarray
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    ln2_g: np.ndarray
    ln2_b: np.ndarray


@dataclass
class EncoderParams:
    token_emb: np.ndarray  # |V| x dim
    pos_emb: np.ndarray  # max_len x dim
    layers: list
    mlm_w: np.ndarray  # dim x |V|
    mlm_b: np.ndarray  # |V|
    heads: int
    loss_history: list = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.token_emb.shape[1]

    @property
    def max_len(self) -> int:
        return self.pos_emb.shape[0]

    def named_params(self) -> list:
        """Stable (name, array) listing covering every trainable group."""
        out = [("token_emb", self.token_emb), ("pos_emb", self.pos_emb)]
        for i, lp in enumerate(self.layers):
            for name in ("wq", "wk", "wv", "wo", "ln1_g", "ln1_b", "w1", "b1", "w2", "b2", "ln2_g", "ln2_b"):
                out.append((f"layer{i}.{name}", getattr(lp, name)))
        out.append(("mlm_w", self.mlm_w))
        out.append(("mlm_b", self.mlm_b))
        return out


def init_params(vocab_size: int, cfg: EncoderConfig, rng: np.random.Generator) -> EncoderParams:
    dim, ffn = cfg.dim, cfg.ffn_dim
    layers = []
    for _ in range(cfg.layers):
        layers.append(
            LayerParams(
                wq=rng.normal(0.0, np.sqrt(1.0 / dim), size=(dim, dim)),
                wk=rng.normal(0.0, np.sqrt(1.0 / dim), size=(dim, dim)),
                wv=rng.normal(0.0, np.sqrt(1.0 / dim), size=(dim, dim)),
                wo=rng.normal(0.0, np.sqrt(1.0 / dim), size=(dim, dim)),
                ln1_g=np.ones(dim, dtype=np.float64),
                ln1_b=np.zeros(dim, dtype=np.float64),
                w1=rng.normal(0.0, np.sqrt(2.0 / dim), size=(dim, ffn)),
                b1=np.zeros(ffn, dtype=np.float64),
                w2=rng.normal(0.0, np.sqrt(1.0 / ffn), size=(ffn, dim)),
                b2=np.zeros(dim, dtype=np.float64),
                ln2_g=np.ones(dim, dtype=np.float64),
                ln2_b=np.zeros(dim, dtype=np.float64),
            )
        )
    return EncoderParams(
        token_emb=rng.normal(0.0, 0.02, size=(vocab_size, dim)),
        pos_emb=rng.normal(0.0, 0.02, size=(cfg.max_len, dim)),
        layers=layers,
        mlm_w=rng.normal(0.0, np.sqrt(1.0 / dim), size=(dim, vocab_size)),
        mlm_b=np.zeros(vocab_size, dtype=np.float64),
        heads=cfg.heads,
    )


def _layernorm_forward(x: np.ndarray, g: np.ndarray, b: np.ndarray):
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    istd = 1.0 / np.sqrt(var + LN_EPS)
    xhat = xc * istd
    return g * xhat + b, (xhat, istd, g)


def _layernorm_backward(dout: np.ndarray, cache):
    xhat, istd, g = cache
    dg = (dout * xhat).sum(axis=0)
    db = dout.sum(axis=0)
    dxhat = dout * g
    dx = istd * (
        dxhat
        - dxhat.mean(axis=-1, keepdims=True)
        - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
    )
    return dx, dg, db


def _split_heads(x: np.ndarray, heads: int) -> np.ndarray:
    L, dim = x.shape
    return x.reshape(L, heads, dim // heads).transpose(1, 0, 2)


def _merge_heads(x: np.ndarray) -> np.ndarray:
    H, L, dh = x.shape
    return x.transpose(1, 0, 2).reshape(L, H * dh)


def _attention_forward(h: np.ndarray, lp: LayerParams, mask: np.ndarray, heads: int):
    dh = h.shape[1] // heads
    scale = 1.0 / np.sqrt(dh)
    q = _split_heads(h @ lp.wq, heads)
    k = _split_heads(h @ lp.wk, heads)
    v = _split_heads(h @ lp.wv, heads)
    scores = (q @ k.transpose(0, 2, 1)) * scale
    scores[:, :, mask == 0] = -np.inf  # padded keys carry exactly zero weight
    m = scores.max(axis=-1, keepdims=True)
    e = np.exp(scores - m)
    attn = e / e.sum(axis=-1, keepdims=True)
    ctx = attn @ v
    merged = _merge_heads(ctx)
    out = merged @ lp.wo
    return out, (h, q, k, v, attn, merged, scale)


def _attention_backward(dout: np.ndarray, lp: LayerParams, cache, heads: int):
    h, q, k, v, attn, merged, scale = cache
    dwo = merged.T @ dout
    dmerged = dout @ lp.wo.T
    dctx = _split_heads(dmerged, heads)
    dattn = dctx @ v.transpose(0, 2, 1)
    dv = attn.transpose(0, 2, 1) @ dctx
    # softmax rows: masked columns have attn 0, so their dscores vanish
    dscores = attn * (dattn - (dattn * attn).sum(axis=-1, keepdims=True))
    dscores *= scale
    dq = dscores @ k
    dk = dscores.transpose(0, 2, 1) @ q
    dq_f = _merge_heads(dq)
    dk_f = _merge_heads(dk)
    dv_f = _merge_heads(dv)
    dwq = h.T @ dq_f
    dwk = h.T @ dk_f
    dwv = h.T @ dv_f
    dh = dq_f @ lp.wq.T + dk_f @ lp.wk.T + dv_f @ lp.wv.T
    return dh, {"wq": dwq, "wk": dwk, "wv": dwv, "wo": dwo}


def _ffn_forward(h: np.ndarray, lp: LayerParams):
    pre = h @ lp.w1 + lp.b1
    act = np.where(pre >= 0, pre, 0.0)
    out = act @ lp.w2 + lp.b2
    return out, (h, pre, act)


def _ffn_backward(dout: np.ndarray, lp: LayerParams, cache):
    h, pre, act = cache
    dw2 = act.T @ dout
    db2 = dout.sum(axis=0)
    dact = dout @ lp.w2.T
    dpre = dact * (pre >= 0)
    dw1 = h.T @ dpre
    db1 = dpre.sum(axis=0)
    dh = dpre @ lp.w1.T
    return dh, {"w1": dw1, "b1": db1, "w2": dw2, "b2": db2}


def _forward_hidden(ids: np.ndarray, mask: np.ndarray, p: EncoderParams):
    if int(mask.sum()) == 0:
        raise DataError("attention mask is all zero; nothing to attend to")
    if len(ids) != p.max_len:
        raise DataError(f"encoded length {len(ids)} does not match max_len {p.max_len}")
    h = p.token_emb[ids] + p.pos_emb
    caches = []
    for lp in p.layers:
        att, att_cache = _attention_forward(h, lp, mask, p.heads)
        s1 = h + att
        mid, ln1_cache = _layernorm_forward(s1, lp.ln1_g, lp.ln1_b)
        ff, ffn_cache = _ffn_forward(mid, lp)
        s2 = mid + ff
        out, ln2_cache = _layernorm_forward(s2, lp.ln2_g, lp.ln2_b)
        caches.append((att_cache, ln1_cache, ffn_cache, ln2_cache))
        h = out
    return h, caches


def _backward_hidden(dh: np.ndarray, ids: np.ndarray, p: EncoderParams, caches, grads: dict):
    for i in range(len(p.layers) - 1, -1, -1):
        lp = p.layers[i]
        att_cache, ln1_cache, ffn_cache, ln2_cache = caches[i]
        ds2, dg2, db2 = _layernorm_backward(dh, ln2_cache)
        grads[f"layer{i}.ln2_g"] += dg2
        grads[f"layer{i}.ln2_b"] += db2
        dmid_ffn, ffn_grads = _ffn_backward(ds2, lp, ffn_cache)
        for name, g in ffn_grads.items():
            grads[f"layer{i}.{name}"] += g
        dmid = ds2 + dmid_ffn
        ds1, dg1, db1 = _layernorm_backward(dmid, ln1_cache)
        grads[f"layer{i}.ln1_g"] += dg1
        grads[f"layer{i}.ln1_b"] += db1
        dh_att, att_grads = _attention_backward(ds1, lp, att_cache, p.heads)
        for name, g in att_grads.items():
            grads[f"layer{i}.{name}"] += g
        dh = ds1 + dh_att
    np.add.at(grads["token_emb"], ids, dh)
    grads["pos_emb"] += dh


def encoder_forward(x: EncodedText, p: EncoderParams) -> np.ndarray:
    """Final hidden states, one row per position (padded rows included)."""
    h, _ = _forward_hidden(x.ids, x.attention_mask, p)
    return h


def attention_weights(x: EncodedText, p: EncoderParams, layer: int = 0) -> np.ndarray:
    """(heads, L, L) softmax weights of one layer, for inspection and tests."""
    if not (0 <= layer < len(p.layers)):
        raise DataError(f"layer index {layer} outside 0..{len(p.layers) - 1}")
    _, caches = _forward_hidden(x.ids, x.attention_mask, p)
    return caches[layer][0][4].copy()


def embed_text_contextual(x: EncodedText, p: EncoderParams) -> np.ndarray:
    """Mean of final-layer vectors over unmasked positions; zeros for empty text."""
    if x.real_length() == 0:
        return np.zeros(p.dim, dtype=np.float64)
    h = encoder_forward(x, p)
    keep = x.attention_mask == 1
    return h[keep].mean(axis=0)


def mlm_logits(x: EncodedText, p: EncoderParams) -> np.ndarray:
    """Per-position vocabulary logits of the masked-token head."""
    return encoder_forward(x, p) @ p.mlm_w + p.mlm_b


def mlm_loss_and_grads(
    p: EncoderParams, input_ids: np.ndarray, mask: np.ndarray, targets: np.ndarray, positions: np.ndarray
):
    """Cross-entropy over the masked positions and grads for every group.

    ``positions`` indexes the rows being predicted; ``targets`` holds the
    original ids at those rows. Returns (loss, grads dict by param name).
    """
    if len(positions) == 0:
        raise DataError("no masked positions to predict")
    h, caches = _forward_hidden(input_ids, mask, p)
    logits = h @ p.mlm_w + p.mlm_b
    rows = logits[positions]
    zmax = rows.max(axis=-1, keepdims=True)
    shifted = rows - zmax
    lse = np.log(np.exp(shifted).sum(axis=-1)) + zmax.ravel()
    picked = rows[np.arange(len(positions)), targets]
    loss = float(np.mean(lse - picked))

    grads = {name: np.zeros_like(arr) for name, arr in p.named_params()}
    probs = np.exp(shifted)
    probs /= probs.sum(axis=-1, keepdims=True)
    dlogit_rows = probs
    dlogit_rows[np.arange(len(positions)), targets] -= 1.0
    dlogit_rows /= len(positions)
    dlogits = np.zeros_like(logits)
    dlogits[positions] = dlogit_rows
    grads["mlm_w"] += h.T @ dlogits
    grads["mlm_b"] += dlogits.sum(axis=0)
    dh = dlogits @ p.mlm_w.T
    _backward_hidden(dh, input_ids, p, caches, grads)
    return loss, grads


def pretrain_masked(corpus: list, v: Vocab, cfg: EncoderConfig) -> EncoderParams:
    """Masked-token pretraining over tokenized sentences.

    Each real position is independently replaced by the mask token with
    probability ``mask_prob``; a step with no masked position consumes its
    random draws but leaves the parameters untouched. Adam updates; fully
    deterministic for a fixed seed.
    """
    if len(v) < 4:
        raise DataError("vocabulary too small to pretrain (needs a real token beyond the reserved three)")
    encoded = [encode(s, v, cfg.max_len) for s in corpus if s]
    encoded = [e for e in encoded if e.real_length() > 0]
    if not encoded:
        raise DataError("corpus has no encodable sentence")

    init_rng = np.random.default_rng([cfg.seed, 0])
    mask_rng = np.random.default_rng([cfg.seed, 1])
    p = init_params(len(v), cfg, init_rng)
    names = [name for name, _ in p.named_params()]
    opt = Adam(cfg.learning_rate)

    for _ in range(cfg.epochs):
        epoch_loss = 0.0
        steps = 0
        for enc in encoded:
            real = np.flatnonzero(enc.attention_mask == 1)
            draws = mask_rng.random(len(real))
            positions = real[draws < cfg.mask_prob]
            if len(positions) == 0:
                continue
            input_ids = enc.ids.copy()
            input_ids[positions] = MASK_ID
            targets = enc.ids[positions]
            loss, grads = mlm_loss_and_grads(p, input_ids, enc.attention_mask, targets, positions)
            if not np.isfinite(loss):
                raise NumericError("masked-token pretraining loss became non-finite")
            params = [arr for _, arr in p.named_params()]
            opt.step(params, [grads[n] for n in names])
            epoch_loss += loss
            steps += 1
        p.loss_history.append(epoch_loss / steps if steps else 0.0)
    return p
