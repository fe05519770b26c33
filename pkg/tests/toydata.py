"""Small synthetic inputs shared by the tests."""

from __future__ import annotations

import numpy as np

from sentipipe.models import build_classifier
from sentipipe.numerics import grad_check
from sentipipe.train import Encoded

# tiny architectures used for finite-difference checks
GRAD_CASES = {
    "linear": dict(dim=5, l2=0.01),
    "cnn": dict(max_len=6, dim=4, filters=2, windows=(2, 3)),
    "lstm": dict(max_len=5, dim=4, fc_size=3),
    "bilstm": dict(max_len=5, dim=4, fc_size=3),
    "transformer": dict(layers=1, hidden=8, heads=2, max_len=7, vocab_size=11),
}


def grad_batch(family: str, seed: int, batch: int = 3):
    """A model plus a random batch and gold labels for gradient checking."""
    rng = np.random.default_rng(1000 + seed)
    model = build_classifier(family, GRAD_CASES[family], seed)
    c = model.config
    gold = rng.integers(0, 3, size=batch)
    if family == "linear":
        feats = {"x": rng.normal(size=(batch, c.dim))}
    elif family == "transformer":
        T = c.max_len
        ids = rng.integers(5, c.vocab_size, size=(batch, T))
        mask = np.ones((batch, T), dtype=np.int64)
        mask[0, T - 2:] = 0  # one padded row
        ids[mask == 0] = 0
        seg = np.zeros((batch, T), dtype=np.int64)
        seg[:, 3:] = 1
        feats = {"ids": ids, "segments": seg, "mask": mask}
    else:
        feats = {"x": rng.normal(size=(batch, c.max_len, c.dim))}
        if family != "cnn":
            feats["lengths"] = np.array([c.max_len, c.max_len - 2, 2][:batch])
    return model, feats, gold


def model_grad_report(family: str, seed: int, **overrides):
    """Finite-difference check of every parameter, in evaluation mode (dropout off)."""
    model, feats, gold = grad_batch(family, seed)
    if overrides:
        model = build_classifier(family, {**GRAD_CASES[family], **overrides}, seed)
    model.eval()
    return grad_check(lambda: model.loss(feats, gold), model.params, seed=seed)


def separable(family: str, n: int = 64, seed: int = 0) -> Encoded:
    """A corpus the family can fit perfectly; the label is carried by one cue."""
    rng = np.random.default_rng(seed)
    y = np.arange(n) % 3
    rng.shuffle(y)
    if family == "linear":
        centers = rng.normal(size=(3, 8)) * 3
        return Encoded({"x": centers[y] + rng.normal(size=(n, 8)) * 0.3}, y)
    if family == "transformer":
        T = 10
        ids = rng.integers(8, 20, size=(n, T))  # filler words
        pos = rng.integers(1, T - 1, size=n)
        ids[np.arange(n), pos] = 5 + y  # one of three cue words
        ids[:, 0] = 2  # [CLS]
        lengths = rng.integers(6, T + 1, size=n)
        mask = (np.arange(T)[None, :] < lengths[:, None]).astype(np.int64)
        pos = np.minimum(pos, lengths - 2)
        ids[np.arange(n), pos] = 5 + y
        ids[mask == 0] = 0
        return Encoded({"ids": ids, "segments": np.zeros_like(ids), "mask": mask}, y)
    s, d = 8, 6
    cues = np.eye(d)[:3] * 3
    x = rng.normal(size=(n, s, d)) * 0.3
    lengths = rng.integers(4, s + 1, size=n)
    pos = rng.integers(0, lengths)
    x[np.arange(n), pos] += cues[y]
    for i, L in enumerate(lengths):
        x[i, L:] = 0
    feats = {"x": x}
    if family != "cnn":
        feats["lengths"] = lengths
    return Encoded(feats, y)


OVERFIT_MODELS = {
    "linear": dict(dim=8, l2=1e-4),
    "cnn": dict(max_len=8, dim=6, filters=8, windows=(2, 3)),
    "lstm": dict(max_len=8, dim=6, hidden=16, fc_size=16),
    "bilstm": dict(max_len=8, dim=6, hidden=16, fc_size=16),
    "transformer": dict(layers=1, hidden=16, heads=2, max_len=10, vocab_size=20),
}


_PIECES = [
    "привет", "Банк", "ОЧЕНЬ", "sberbank", "x", "ооооо", "aaaa", "123", "+7 999 123-45-67",
    "@ivan", "@", "#", "#тег", "##", "http://t.co/x", "https://a.b/c?d=1", "www.site.ru",
    "mail@bank.ru", "a.b@c.d", ":)", ":-(", ":D", ";)", ":|", "))", "(((", ")", "(", "!!!",
    "?", "—", "-", "_", "$", "€", "😀", "♥", "%", "&", "*", "/", "\\", "\"", "'", ".", ",",
    "\t", "\n", " ", "  ", "ё", "Ё", "ß", "İ", "٣", "½",
]


def fuzz_strings(n: int, seed: int = 0, max_pieces: int = 8) -> list[str]:
    """Random concatenations of tweet-like fragments and stray symbols."""
    import random

    rng = random.Random(seed)
    out = []
    for _ in range(n):
        k = rng.randint(0, max_pieces)
        parts = []
        for _ in range(k):
            if rng.random() < 0.15:
                parts.append(chr(rng.randint(0x21, 0x2FF)))
            else:
                parts.append(rng.choice(_PIECES))
            parts.append(rng.choice(["", " ", " ", " "]))
        out.append("".join(parts))
    return out
