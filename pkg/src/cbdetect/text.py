"""Tokenization, vocabulary construction, and fixed-length id encoding."""

from __future__ import annotations

import unicodedata
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from cbdetect.errors import DataError

PAD_ID = 0
UNK_ID = 1
MASK_ID = 2
PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
MASK_TOKEN = "<mask>"
RESERVED_TOKENS = (PAD_TOKEN, UNK_TOKEN, MASK_TOKEN)


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def tokenize(s: str) -> list[str]:
    """Split a string into lowercased word tokens.

    Splits on Unicode whitespace, strips leading/trailing punctuation from
    each token (interior apostrophes and hyphens survive), and drops tokens
    that end up empty.
    """
    tokens = []
    for raw in s.lower().split():
        start, end = 0, len(raw)
        while start < end and _is_punct(raw[start]):
            start += 1
        while end > start and _is_punct(raw[end - 1]):
            end -= 1
        if end > start:
            tokens.append(raw[start:end])
    return tokens


@dataclass
class Vocab:
    """Token/id bijection with reserved ids 0..2 for pad, unk, and mask."""

    id_to_token: list[str]
    token_to_id: dict[str, int] = field(repr=False)
    counts: list[int] = field(repr=False)  # corpus frequency per id; 0 for reserved

    def __len__(self) -> int:
        return len(self.id_to_token)

    def lookup(self, token: str) -> int:
        """Id for a token, falling back to the unknown-token id."""
        return self.token_to_id.get(token, UNK_ID)

    def to_ids(self, tokens: list[str]) -> list[int]:
        return [self.token_to_id.get(t, UNK_ID) for t in tokens]


def build_vocab(corpus: list[list[str]], min_count: int = 1, max_size: int = 100_000) -> Vocab:
    """Build a vocabulary from tokenized sentences.

    Keeps the ``max_size`` most frequent tokens whose corpus frequency is at
    least ``min_count``; ties are broken lexicographically. Reserved tokens
    occupy ids 0..2 and do not count against ``max_size``.
    """
    if not corpus:
        raise DataError("cannot build a vocabulary from an empty corpus")
    counter: Counter[str] = Counter()
    for sentence in corpus:
        counter.update(sentence)
    # a literal reserved token in the corpus would collide with its fixed id
    for reserved in RESERVED_TOKENS:
        counter.pop(reserved, None)
    eligible = [(tok, c) for tok, c in counter.items() if c >= min_count]
    if not eligible:
        raise DataError(f"no token reaches min_count={min_count}")
    eligible.sort(key=lambda item: (-item[1], item[0]))
    retained = eligible[:max_size]

    id_to_token = list(RESERVED_TOKENS) + [tok for tok, _ in retained]
    counts = [0, 0, 0] + [c for _, c in retained]
    token_to_id = {tok: i for i, tok in enumerate(id_to_token)}
    return Vocab(id_to_token=id_to_token, token_to_id=token_to_id, counts=counts)


@dataclass(frozen=True)
class EncodedText:
    """Fixed-length id sequence with its attention mask (1 = real token)."""

    ids: np.ndarray
    attention_mask: np.ndarray

    def real_length(self) -> int:
        return int(self.attention_mask.sum())


def encode(tokens: list[str], v: Vocab, max_len: int) -> EncodedText:
    """Encode tokens to ``max_len`` ids plus attention mask.

    Unknown tokens map to the unk id; sequences longer than ``max_len`` are
    truncated at the tail (titles front-load their signal), shorter ones are
    padded with the pad id and mask 0.
    """
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    kept = tokens[:max_len]
    ids = np.full(max_len, PAD_ID, dtype=np.int64)
    mask = np.zeros(max_len, dtype=np.int64)
    for i, tok in enumerate(kept):
        ids[i] = v.token_to_id.get(tok, UNK_ID)
        mask[i] = 1
    return EncodedText(ids=ids, attention_mask=mask)


def decode(x: EncodedText, v: Vocab) -> list[str]:
    """Tokens at mask-1 positions, in order."""
    return [v.id_to_token[int(i)] for i, m in zip(x.ids, x.attention_mask) if m]


def vocab_to_text(v: Vocab) -> str:
    """One token per line, reserved trio first."""
    return "".join(tok + "\n" for tok in v.id_to_token)


def vocab_from_text(text: str, origin: str = "vocab text") -> Vocab:
    """Inverse of :func:`vocab_to_text`.

    Corpus frequencies are not part of the text format, so counts come back
    as zero; a rebuilt vocabulary supports encoding but not retraining.
    """
    tokens = text.split("\n")
    while tokens and tokens[-1] == "":
        tokens.pop()
    if tuple(tokens[:3]) != RESERVED_TOKENS:
        raise DataError(f"{origin} lacks the reserved-token header")
    token_to_id = {tok: i for i, tok in enumerate(tokens)}
    if len(token_to_id) != len(tokens):
        raise DataError(f"{origin} contains duplicate tokens")
    return Vocab(id_to_token=tokens, token_to_id=token_to_id, counts=[0] * len(tokens))


def save_vocab(v: Vocab, path) -> None:
    """Write the vocabulary as one token per line, reserved trio first."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(vocab_to_text(v))


def load_vocab(path) -> Vocab:
    """Read a vocabulary written by :func:`save_vocab`."""
    with open(path, encoding="utf-8") as fh:
        return vocab_from_text(fh.read(), origin=str(path))
