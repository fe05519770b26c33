"""A small BERT-style encoder trained from scratch.

Inputs are ``[CLS] a [SEP]`` or ``[CLS] a [SEP] b [SEP]``; the representation of
each position is the sum of token, segment and position embeddings.  Layers
are post-norm (attention, add & norm, GELU feed-forward, add & norm) and the
class scores are ``W @ C + b`` for the final hidden state ``C`` of ``[CLS]``.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from sentipipe.embed import CLS, MASK, PAD, SEP, UNK
from sentipipe.models.base import N_CLASSES, Batch, Classifier, ShapeError, linear
from sentipipe.numerics import Tensor, ops
from sentipipe.reformulate import ReformulatedInput
from sentipipe.textnorm import tokenize

SPECIALS = (PAD, UNK, CLS, SEP, MASK)
# additive attention bias for padded keys; exp() of it underflows to exactly 0
MASK_BIAS = -1e9


@dataclass(frozen=True)
class MiniBertConfig:
    layers: int = 2
    hidden: int = 64
    heads: int = 4
    ff_mult: int = 4
    max_len: int = 64
    dropout: float = 0.1
    vocab_size: int = len(SPECIALS)
    n_classes: int = N_CLASSES
    ln_eps: float = 1e-12

    def __post_init__(self):
        if self.hidden % self.heads:
            raise ValueError(f"hidden size {self.hidden} not divisible by {self.heads} heads")
        if self.max_len < 3:
            raise ValueError("max_len must leave room for [CLS] and [SEP]")

    @property
    def head_dim(self) -> int:
        return self.hidden // self.heads


class Vocab:
    """Word-level vocabulary; the special tokens take the first ids."""

    def __init__(self, tokens: Sequence[str]):
        tokens = list(tokens)
        if tuple(tokens[: len(SPECIALS)]) != SPECIALS:
            tokens = list(SPECIALS) + [t for t in tokens if t not in SPECIALS]
        if len(set(tokens)) != len(tokens):
            raise ValueError("duplicate vocabulary entries")
        self.tokens = tuple(tokens)
        self.index = {t: i for i, t in enumerate(self.tokens)}

    @classmethod
    def build(cls, sentences: Iterable[str], min_count: int = 1) -> "Vocab":
        counts = Counter(tok for s in sentences for tok in tokenize(s))
        # frequency-descending, ties alphabetical, so the vocabulary is order-independent
        words = sorted((t for t, n in counts.items() if n >= min_count and t not in SPECIALS),
                       key=lambda t: (-counts[t], t))
        return cls(list(SPECIALS) + words)

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def id(self, token: str) -> int:
        return self.index.get(token, self.index[UNK])


def encode_pair(
    config: MiniBertConfig, item: ReformulatedInput, vocab: Vocab
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Token ids, segment ids and attention mask, each of length ``config.max_len``.

    When the input does not fit, tokens are dropped from the end of sentence a;
    the auxiliary sentence is always kept whole.
    """
    for tok in SPECIALS:
        if tok not in vocab:
            raise ValueError(f"vocabulary lacks special token {tok}")
    a = tokenize(item.sentence_a)
    b = tokenize(item.sentence_b) if item.sentence_b is not None else None
    fixed = 2 + (len(b) + 1 if b is not None else 0)
    if fixed > config.max_len:
        raise ValueError(f"auxiliary sentence needs {fixed} positions, max_len is {config.max_len}")
    a = a[: config.max_len - fixed]
    seq = [CLS, *a, SEP]
    segments = [0] * len(seq)
    if b is not None:
        seq += [*b, SEP]
        segments += [1] * (len(b) + 1)
    n = len(seq)
    ids = np.full(config.max_len, vocab.id(PAD), dtype=np.int64)
    ids[:n] = [vocab.id(t) for t in seq]
    seg = np.zeros(config.max_len, dtype=np.int64)
    seg[:n] = segments
    mask = np.zeros(config.max_len, dtype=np.int64)
    mask[:n] = 1
    return ids, seg, mask


class MiniBert(Classifier):
    """Input batch: ``{"ids", "segments", "mask"}``, each ``(B, T)`` integers."""

    family = "transformer"

    def __init__(self, config: MiniBertConfig, seed: int = 0):
        super().__init__(config, seed)
        c = config
        H = c.hidden
        self.weight("emb.token", c.vocab_size, H)
        self.weight("emb.segment", 2, H)
        self.weight("emb.position", c.max_len, H)
        self.param("emb.ln.g", np.ones(H))
        self.bias("emb.ln.b", H)
        for layer in range(c.layers):
            p = f"layer{layer}"
            for proj in ("q", "k", "v", "o"):
                self.weight(f"{p}.attn.{proj}.W", H, H)
                # a key bias only shifts every score in a row by the same amount,
                # which softmax cancels; it would be a dead parameter
                if proj != "k":
                    self.bias(f"{p}.attn.{proj}.b", H)
            self.param(f"{p}.ln1.g", np.ones(H))
            self.bias(f"{p}.ln1.b", H)
            self.weight(f"{p}.ff1.W", H, c.ff_mult * H)
            self.bias(f"{p}.ff1.b", c.ff_mult * H)
            self.weight(f"{p}.ff2.W", c.ff_mult * H, H)
            self.bias(f"{p}.ff2.b", H)
            self.param(f"{p}.ln2.g", np.ones(H))
            self.bias(f"{p}.ln2.b", H)
        # classification matrix stored as (K, H)
        self.param("cls.W", np.ascontiguousarray(
            self._glorot_t(c.n_classes, H)))
        self.bias("cls.b", c.n_classes)
        self.last_attention: list[np.ndarray] = []

    def _glorot_t(self, k: int, h: int) -> np.ndarray:
        limit = math.sqrt(6.0 / (k + h))
        return self._init_rng.uniform(-limit, limit, size=(k, h))

    def _inputs(self, batch: Batch) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        ids = self.check_batch(batch, "ids", 2)
        seg = np.asarray(batch.get("segments", np.zeros_like(ids)))
        mask = np.asarray(batch.get("mask", np.ones_like(ids)))
        if seg.shape != ids.shape or mask.shape != ids.shape:
            raise ShapeError("ids, segments and mask must share a shape")
        if ids.shape[1] > self.config.max_len:
            raise ShapeError(f"sequence length {ids.shape[1]} exceeds max_len {self.config.max_len}")
        if ids.min() < 0 or ids.max() >= self.config.vocab_size:
            raise ShapeError("token id outside the vocabulary")
        return ids, seg, mask

    def _attention(self, x: Tensor, prefix: str, bias: np.ndarray) -> Tensor:
        c = self.config
        B, T, H = x.shape
        nh, dh = c.heads, c.head_dim
        P = self.params

        def heads(name):
            y = ops.matmul(x, P[f"{prefix}.{name}.W"])
            if f"{prefix}.{name}.b" in P:
                y = ops.add(y, P[f"{prefix}.{name}.b"])
            return ops.transpose(ops.reshape(y, (B, T, nh, dh)), (0, 2, 1, 3))

        q, k, v = heads("q"), heads("k"), heads("v")
        scores = ops.mul(ops.matmul(q, ops.transpose(k, (0, 1, 3, 2))), 1.0 / math.sqrt(dh))
        weights = ops.softmax(ops.add(scores, bias), axis=-1)
        self.last_attention.append(weights.data.copy())
        weights = self.dropout(weights, c.dropout)
        ctx = ops.reshape(ops.transpose(ops.matmul(weights, v), (0, 2, 1, 3)), (B, T, H))
        return linear(ctx, P[f"{prefix}.o.W"], P[f"{prefix}.o.b"])

    def hidden_states(self, batch: Batch) -> Tensor:
        c = self.config
        P = self.params
        ids, seg, mask = self._inputs(batch)
        T = ids.shape[1]
        x = ops.add(
            ops.add(ops.embedding(P["emb.token"], ids), ops.embedding(P["emb.segment"], seg)),
            ops.embedding(P["emb.position"], np.arange(T)),
        )
        x = self.dropout(ops.layer_norm(x, P["emb.ln.g"], P["emb.ln.b"], c.ln_eps), c.dropout)
        bias = np.where(mask[:, None, None, :] > 0, 0.0, MASK_BIAS)
        self.last_attention = []
        for layer in range(c.layers):
            p = f"layer{layer}"
            a = self.dropout(self._attention(x, f"{p}.attn", bias), c.dropout)
            x = ops.layer_norm(ops.add(x, a), P[f"{p}.ln1.g"], P[f"{p}.ln1.b"], c.ln_eps)
            f = ops.gelu(linear(x, P[f"{p}.ff1.W"], P[f"{p}.ff1.b"]))
            f = self.dropout(linear(f, P[f"{p}.ff2.W"], P[f"{p}.ff2.b"]), c.dropout)
            x = ops.layer_norm(ops.add(x, f), P[f"{p}.ln2.g"], P[f"{p}.ln2.b"], c.ln_eps)
        return x

    def logits(self, batch: Batch) -> Tensor:
        first = self.hidden_states(batch)[:, 0, :]
        first = self.dropout(first, self.config.dropout)
        return ops.add(ops.matmul(first, ops.transpose(self.params["cls.W"])), self.params["cls.b"])
