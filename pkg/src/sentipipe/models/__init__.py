"""Classifier families and model checkpoints."""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from sentipipe.models.base import (
    N_CLASSES,
    Classifier,
    SequenceSpec,
    ShapeError,
    encode_tokens,
    predict_from_probs,
)
from sentipipe.models.cnn import CnnClassifier, CnnConfig
from sentipipe.models.linear import LinearClassifier, LinearConfig
from sentipipe.models.recurrent import BiLstmClassifier, LstmClassifier, LstmConfig
from sentipipe.models.transformer import MiniBert, MiniBertConfig, Vocab, encode_pair

FAMILIES: dict[str, tuple[type[Classifier], type]] = {
    "linear": (LinearClassifier, LinearConfig),
    "cnn": (CnnClassifier, CnnConfig),
    "lstm": (LstmClassifier, LstmConfig),
    "bilstm": (BiLstmClassifier, LstmConfig),
    "transformer": (MiniBert, MiniBertConfig),
}

CHECKPOINT_FORMAT = "sentipipe-checkpoint"
CHECKPOINT_VERSION = 1


def make_config(family: str, values: Mapping[str, Any]):
    """Build the family's config dataclass, ignoring keys it does not define."""
    try:
        _, cfg_cls = FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown model family {family!r}; choose from {sorted(FAMILIES)}") from None
    names = {f.name for f in dataclasses.fields(cfg_cls)}
    return cfg_cls(**{k: v for k, v in values.items() if k in names})


def build_classifier(family: str, config, seed: int = 0) -> Classifier:
    if not dataclasses.is_dataclass(config):
        config = make_config(family, config)
    cls, _ = FAMILIES[family]
    return cls(config, seed)


def save_checkpoint(model: Classifier, path: str | Path, extra: Mapping[str, Any] | None = None,
                    arrays: Mapping[str, np.ndarray] | None = None) -> None:
    """Write config, parameters and any vocabulary/embedding arrays to one ``.npz`` file."""
    meta = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "family": model.family,
        "dtype": "float64",
        "seed": model.seed,
        "config": dataclasses.asdict(model.config),
        "extra": dict(extra or {}),
    }
    payload = {"__meta__": np.array(json.dumps(meta, sort_keys=True))}
    payload.update({f"param/{k}": v for k, v in model.state_dict().items()})
    payload.update({f"array/{k}": np.asarray(v) for k, v in (arrays or {}).items()})
    with open(path, "wb") as fh:
        np.savez(fh, **payload)


def load_checkpoint(path: str | Path) -> tuple[Classifier, dict, dict[str, np.ndarray]]:
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["__meta__"]))
        if meta.get("format") != CHECKPOINT_FORMAT:
            raise ValueError(f"{path}: not a {CHECKPOINT_FORMAT} file")
        if meta.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {meta.get('version')}")
        state = {k[len("param/"):]: data[k] for k in data.files if k.startswith("param/")}
        arrays = {k[len("array/"):]: data[k] for k in data.files if k.startswith("array/")}
    config = meta["config"]
    for key in ("windows",):
        if key in config:
            config[key] = tuple(config[key])
    model = build_classifier(meta["family"], make_config(meta["family"], config), meta["seed"])
    model.load_state_dict(state)
    model.eval()
    return model, meta, arrays


__all__ = [
    "FAMILIES",
    "N_CLASSES",
    "BiLstmClassifier",
    "Classifier",
    "CnnClassifier",
    "CnnConfig",
    "LinearClassifier",
    "LinearConfig",
    "LstmClassifier",
    "LstmConfig",
    "MiniBert",
    "MiniBertConfig",
    "SequenceSpec",
    "ShapeError",
    "Vocab",
    "build_classifier",
    "encode_pair",
    "encode_tokens",
    "load_checkpoint",
    "make_config",
    "predict_from_probs",
    "save_checkpoint",
]
