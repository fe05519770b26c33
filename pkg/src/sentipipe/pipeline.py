"""Dataset -> reformulated text -> model features.

Targeted samples are masked first and normalized afterwards with the mask
token protected, so normalization can neither break the entity match nor
lowercase the mask.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from sentipipe.corpus import Dataset, TaskKind
from sentipipe.embed import EmbeddingTable, special_vector
from sentipipe.models import MiniBertConfig, SequenceSpec, Vocab, encode_pair, encode_tokens
from sentipipe.reformulate import DEFAULT_MASK, ReformulatedInput, Scheme, reformulate
from sentipipe.textnorm import NormConfig, normalize, tokenize
from sentipipe.train import Encoded

SEQUENCE_FAMILIES = ("cnn", "lstm", "bilstm")


def prepare(
    dataset: Dataset,
    scheme: Scheme | str = Scheme.SINGLE,
    norm: NormConfig | None = None,
    mask_token: str = DEFAULT_MASK,
    prompts: Mapping[Scheme, str] | None = None,
) -> list[ReformulatedInput]:
    out = []
    for s in dataset:
        item = reformulate(s, dataset.task_kind, scheme, mask_token, prompts)
        if norm is not None:
            text = item.sentence_a
            if dataset.task_kind is TaskKind.GENERAL:
                # keep "MASK =" outside normalization; strip_special would drop "="
                head = f"{mask_token} = "
                text = head + normalize(text[len(head):], norm, (mask_token,))
            else:
                text = normalize(text, norm, (mask_token,))
            item = ReformulatedInput(text, item.sentence_b, item.mask_token, item.masked_surfaces)
        out.append(item)
    return out


def item_tokens(item: ReformulatedInput) -> list[str]:
    """Flat token list for models without a notion of sentence pairs."""
    tokens = tokenize(item.sentence_a)
    if item.sentence_b is not None:
        tokens += tokenize(item.sentence_b)
    return tokens


def random_embeddings(items: Sequence[ReformulatedInput], dim: int) -> EmbeddingTable:
    """Stand-in table when no vector file is configured: one hash-seeded unit vector per token."""
    vocab = sorted({t for it in items for t in item_tokens(it)})
    vectors = np.array([special_vector(t, dim) for t in vocab]).reshape(len(vocab), dim)
    return EmbeddingTable(vocab, vectors)


@dataclass
class Encoder:
    """Feature builder for one model family; holds the table or vocabulary it needs."""

    family: str
    table: EmbeddingTable | None = None
    vocab: Vocab | None = None
    max_len: int = 50
    bert: MiniBertConfig | None = None

    def encode(self, items: Sequence[ReformulatedInput], labels: Sequence[int], ids: Sequence[str] = ()) -> Encoded:
        labels = np.asarray([int(x) for x in labels], dtype=np.int64)
        if self.family == "transformer":
            rows = [encode_pair(self.bert, it, self.vocab) for it in items]
            feats = {
                "ids": np.stack([r[0] for r in rows]),
                "segments": np.stack([r[1] for r in rows]),
                "mask": np.stack([r[2] for r in rows]),
            }
        elif self.family == "linear":
            feats = {"x": np.stack([self.table.average(item_tokens(it)) for it in items])}
        elif self.family in SEQUENCE_FAMILIES:
            spec = SequenceSpec(self.max_len, self.table.dim)
            toks = [item_tokens(it) for it in items]
            feats = {
                "x": np.stack([encode_tokens(spec, self.table, t) for t in toks]),
                "lengths": np.array([max(1, min(len(t), self.max_len)) for t in toks], dtype=np.int64),
            }
        else:
            raise ValueError(f"unknown model family {self.family!r}")
        return Encoded(feats, labels, tuple(ids))

    def encode_dataset(self, dataset: Dataset, items: Sequence[ReformulatedInput]) -> Encoded:
        return self.encode(items, [s.label for s in dataset], [s.id for s in dataset])
