"""INI-configured experiments: load, normalize, reformulate, encode, train, evaluate.

Config sections and keys (defaults in ``DEFAULTS``)::

    [data]        train, test, valid, valid_fraction, task_kind, embeddings, embedding_dim
    [textnorm]    enabled, steps, stopwords, emoticons, lemmas
    [reformulate] scheme, mask, prompts
    [model]       family plus any field of that family's config
    [train]       lr, batch_size, epochs, seed, runs, optimizer, metric
    [output]      dir, reference, reference_dataset
    [grid]        metric plus ``name = v1, v2, ...`` candidate lists

Relative paths are resolved against the config file's directory.
"""

from __future__ import annotations

import ast
import configparser
import dataclasses
import logging
import shutil
import tempfile
import time
from io import StringIO
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from sentipipe.corpus import Dataset, TaskKind, load_dataset, split
from sentipipe.difficult import write_predictions
from sentipipe.embed import EmbeddingTable, load_embeddings
from sentipipe.metrics import (
    compare_reference,
    comparison_to_tsv,
    format_comparison,
    load_reference,
    metrics_to_tsv,
)
from sentipipe.models import FAMILIES, MiniBertConfig, Vocab, build_classifier, make_config, save_checkpoint
from sentipipe.pipeline import Encoder, prepare, random_embeddings
from sentipipe.reformulate import Scheme, load_prompts
from sentipipe.textnorm import STEP_ORDER, NormConfig, NormStep
from sentipipe.train import GridSpec, TrainConfig, TRAIN_KEYS, grid_search, predict, run_n

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Invalid or incomplete experiment configuration (exit code 2)."""


DEFAULTS: dict[str, dict[str, str]] = {
    "data": {
        "train": "",
        "test": "",
        "valid": "",
        "valid_fraction": "0.1",
        "task_kind": "targeted",
        "embeddings": "",
        "embedding_dim": "300",
    },
    "textnorm": {
        "enabled": "true",
        "steps": ",".join(s.value for s in STEP_ORDER if s is not NormStep.LEMMA_STOP),
        "stopwords": "",
        "emoticons": "",
        "lemmas": "",
    },
    "reformulate": {"scheme": "single", "mask": "MASK", "prompts": ""},
    "model": {"family": "linear"},
    "train": {
        "lr": "0.001",
        "batch_size": "32",
        "epochs": "30",
        "seed": "0",
        "runs": "5",
        "optimizer": "adam",
        "metric": "f1pm_macro",
    },
    "output": {"dir": "runs/experiment", "reference": "", "reference_dataset": ""},
    "grid": {"metric": "f1pm_macro"},
}
PATH_KEYS = {
    ("data", "train"), ("data", "test"), ("data", "valid"), ("data", "embeddings"),
    ("textnorm", "stopwords"), ("textnorm", "emoticons"), ("textnorm", "lemmas"),
    ("reformulate", "prompts"), ("output", "reference"), ("output", "dir"),
}


def parse_value(raw: str) -> Any:
    """Python literal when it parses (``0.1``, ``(2, 3)``), else the bare string."""
    raw = raw.strip()
    try:
        return ast.literal_eval(raw)
    except (ValueError, SyntaxError):
        return raw


def parse_list(raw: str) -> list[Any]:
    return [parse_value(v) for v in raw.split(",") if v.strip()]


def _tuple_fields(value: Any) -> Any:
    return tuple(value) if isinstance(value, list) else value


@dataclass
class ExperimentConfig:
    sections: dict[str, dict[str, str]]
    base_dir: Path

    @classmethod
    def load(cls, path: str | Path, overrides: Mapping[str, Mapping[str, str]] | None = None) -> "ExperimentConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        parser = configparser.ConfigParser(interpolation=None)
        try:
            parser.read(path, encoding="utf-8")
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from None
        return cls.from_parser(parser, path.parent, overrides)

    @classmethod
    def from_parser(cls, parser: configparser.ConfigParser, base_dir: Path,
                    overrides: Mapping[str, Mapping[str, str]] | None = None) -> "ExperimentConfig":
        unknown = set(parser.sections()) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config sections: {', '.join(sorted(unknown))}")
        sections = {name: dict(values) for name, values in DEFAULTS.items()}
        for name in parser.sections():
            sections[name].update(parser[name])
        for name, values in (overrides or {}).items():
            sections.setdefault(name, {}).update({k: str(v) for k, v in values.items()})
        cfg = cls(sections, Path(base_dir))
        cfg.validate()
        return cfg

    def get(self, section: str, key: str) -> str:
        return self.sections[section].get(key, "")

    def path(self, section: str, key: str) -> Path | None:
        raw = self.get(section, key).strip()
        if not raw:
            return None
        p = Path(raw)
        return p if p.is_absolute() else self.base_dir / p

    def validate(self) -> None:
        for section, key in PATH_KEYS:
            if key == "dir":
                continue
            p = self.path(section, key)
            if p is not None and not p.is_file():
                raise ConfigError(f"[{section}] {key}: file not found: {p}")
        if self.path("data", "train") is None:
            raise ConfigError("[data] train is required")
        try:
            TaskKind.parse(self.get("data", "task_kind"))
            Scheme.parse(self.get("reformulate", "scheme"))
            self.train_config()
            self.model_config()
            self.norm_config()
        except ConfigError:
            raise
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from None

    @property
    def family(self) -> str:
        fam = self.get("model", "family").strip().lower()
        if fam not in FAMILIES:
            raise ConfigError(f"[model] family must be one of {sorted(FAMILIES)}, got {fam!r}")
        return fam

    def model_values(self) -> dict[str, Any]:
        return {k: _tuple_fields(parse_value(v)) for k, v in self.sections["model"].items() if k != "family"}

    def model_config(self, extra: Mapping[str, Any] | None = None):
        values = self.model_values()
        values.update(extra or {})
        _, cfg_cls = FAMILIES[self.family]
        names = {f.name for f in dataclasses.fields(cfg_cls)}
        unknown = set(self.model_values()) - names
        if unknown:
            raise ConfigError(f"[model] unknown keys for {self.family}: {', '.join(sorted(unknown))}")
        return make_config(self.family, values)

    def train_config(self) -> TrainConfig:
        t = self.sections["train"]
        return TrainConfig(
            lr=float(t["lr"]),
            batch_size=int(t["batch_size"]),
            epochs=int(t["epochs"]),
            seed=int(t["seed"]),
            runs=int(t["runs"]),
            optimizer=t["optimizer"].strip().lower(),
        )

    @property
    def metric(self) -> str:
        return self.get("train", "metric").strip()

    def norm_config(self) -> NormConfig | None:
        if str(parse_value(self.get("textnorm", "enabled"))).lower() in ("false", "0", "no", "off"):
            return None
        steps = [s.strip() for s in self.get("textnorm", "steps").split(",") if s.strip()]
        return NormConfig.build(
            steps,
            stopword_path=self.path("textnorm", "stopwords"),
            emoticon_path=self.path("textnorm", "emoticons"),
            lemma_path=self.path("textnorm", "lemmas"),
        )

    def grid(self) -> GridSpec:
        params = {k: parse_list(v) for k, v in self.sections["grid"].items() if k != "metric"}
        if not params:
            raise ConfigError("[grid] has no parameters to search")
        return GridSpec(params, self.get("grid", "metric").strip())

    def snapshot(self) -> str:
        """Resolved configuration with every default written out, paths made absolute."""
        parser = configparser.ConfigParser(interpolation=None)
        for name in DEFAULTS:
            parser[name] = {}
            for key in sorted(self.sections[name]):
                value = self.sections[name][key]
                if (name, key) in PATH_KEYS and value.strip():
                    value = str(self.path(name, key).resolve())
                parser[name][key] = value
        buf = StringIO()
        parser.write(buf)
        return buf.getvalue()


@dataclass
class PreparedData:
    train: Dataset
    test: Dataset | None
    valid: Dataset | None
    encoder: Encoder


def _load_table(cfg: ExperimentConfig, items) -> EmbeddingTable:
    p = cfg.path("data", "embeddings")
    if p is not None:
        return load_embeddings(p)
    return random_embeddings(items, int(cfg.get("data", "embedding_dim")))


def prepare_data(cfg: ExperimentConfig, need_valid: bool = False):
    """Load splits and build the encoder; returns ``(PreparedData, prepared items per split)``."""
    kind = TaskKind.parse(cfg.get("data", "task_kind"))
    train_set = load_dataset(cfg.path("data", "train"), kind)
    test_path = cfg.path("data", "test")
    test_set = load_dataset(test_path, kind) if test_path else None
    valid_path = cfg.path("data", "valid")
    valid_set = load_dataset(valid_path, kind) if valid_path else None
    if need_valid and valid_set is None:
        valid_set, train_set = split(train_set, float(cfg.get("data", "valid_fraction")),
                                     cfg.train_config().seed)
    norm = cfg.norm_config()
    scheme = Scheme.parse(cfg.get("reformulate", "scheme"))
    prompts_path = cfg.path("reformulate", "prompts")
    prompts = load_prompts(prompts_path) if prompts_path else None
    mask = cfg.get("reformulate", "mask").strip() or "MASK"

    def prep(ds):
        return None if ds is None else prepare(ds, scheme, norm, mask, prompts)

    items = {"train": prep(train_set), "test": prep(test_set), "valid": prep(valid_set)}
    family = cfg.family
    if family == "transformer":
        vocab = Vocab.build([s for it in items["train"] for s in (it.sentence_a, it.sentence_b) if s])
        bert = cfg.model_config({"vocab_size": len(vocab)})
        encoder = Encoder(family, vocab=vocab, bert=bert)
    else:
        table = _load_table(cfg, [it for part in items.values() if part for it in part])
        encoder = Encoder(family, table=table, max_len=int(cfg.model_values().get("max_len", 50)))
    return PreparedData(train_set, test_set, valid_set, encoder), items


def model_config_for(cfg: ExperimentConfig, encoder: Encoder, extra: Mapping[str, Any] | None = None):
    values = dict(extra or {})
    if encoder.family == "transformer":
        values["vocab_size"] = len(encoder.vocab)
    else:
        values["dim"] = encoder.table.dim
    return cfg.model_config(values)


def checkpoint_arrays(encoder: Encoder) -> dict[str, np.ndarray]:
    if encoder.family == "transformer":
        return {"vocab": np.array(encoder.vocab.tokens)}
    return {"embed_tokens": np.array(encoder.table.tokens), "embed_vectors": encoder.table.vectors}


def encoder_from_checkpoint(meta: Mapping[str, Any], arrays: Mapping[str, np.ndarray]) -> Encoder:
    family = meta["family"]
    if family == "transformer":
        vocab = Vocab([str(t) for t in arrays["vocab"]])
        return Encoder(family, vocab=vocab, bert=MiniBertConfig(**meta["config"]))
    table = EmbeddingTable([str(t) for t in arrays["embed_tokens"]], arrays["embed_vectors"], add_specials=False)
    return Encoder(family, table=table, max_len=int(meta["config"].get("max_len", 50)))


class _LogCapture:
    """Route the package logger to a timestamped file for the duration of a run."""

    def __init__(self, path: Path):
        self.handler = logging.FileHandler(path, encoding="utf-8")
        self.handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
        self.logger = logging.getLogger("sentipipe")

    def __enter__(self):
        self._level = self.logger.level
        self.logger.setLevel(logging.INFO)
        self.logger.addHandler(self.handler)
        return self

    def __exit__(self, *exc):
        self.logger.removeHandler(self.handler)
        self.logger.setLevel(self._level)
        self.handler.close()


def _publish(tmp: Path, out_dir: Path) -> None:
    if out_dir.exists():
        shutil.rmtree(out_dir)
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    shutil.move(str(tmp), str(out_dir))


def run_experiment(cfg: ExperimentConfig, out_dir: str | Path | None = None) -> Path:
    """Train ``runs`` models and write reports; on any error nothing is left behind.

    Layout: ``config.ini``, ``run.log``, ``run<i>/{report,history,predictions}.tsv``,
    ``mean_report.tsv``, ``comparison.tsv`` and ``checkpoint.npz`` (first run).
    """
    out_dir = Path(out_dir) if out_dir else cfg.path("output", "dir")
    if cfg.path("data", "test") is None:
        raise ConfigError("[data] test is required for training runs")
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=".partial-", dir=out_dir.parent))
    try:
        with _LogCapture(tmp / "run.log"):
            (tmp / "config.ini").write_text(cfg.snapshot(), encoding="utf-8")
            started = time.time()
            log.info("experiment start: family=%s out=%s", cfg.family, out_dir)
            data, items = prepare_data(cfg)
            enc = data.encoder
            train_enc = enc.encode_dataset(data.train, items["train"])
            test_enc = enc.encode_dataset(data.test, items["test"])
            valid_enc = enc.encode_dataset(data.valid, items["valid"]) if data.valid else None
            model_cfg = model_config_for(cfg, enc)
            tc = cfg.train_config()
            log.info("train=%d test=%d runs=%d seeds=%s", len(train_enc), len(test_enc), tc.runs,
                     list(range(tc.seed, tc.seed + tc.runs)))
            result = run_n(lambda seed: build_classifier(cfg.family, model_cfg, seed),
                           train_enc, test_enc, tc, valid_enc, cfg.metric, keep_models=True)
            for i, (seed, report, hist, model) in enumerate(
                zip(result.seeds, result.reports, result.histories, result.models)
            ):
                run_dir = tmp / f"run{i}"
                run_dir.mkdir()
                (run_dir / "report.tsv").write_text(report.to_tsv(), encoding="utf-8")
                (run_dir / "history.tsv").write_text(hist.to_tsv(), encoding="utf-8")
                write_predictions(run_dir / "predictions.tsv", test_enc.ids, predict(model, test_enc))
                log.info("run %d seed %d: %s", i, seed,
                         " ".join(f"{k}={v:.4f}" for k, v in report.metrics().items()))
            mean = result.mean
            (tmp / "mean_report.tsv").write_text(metrics_to_tsv(mean), encoding="utf-8")
            ref_path = cfg.path("output", "reference")
            ref = load_reference(ref_path) if ref_path else []
            dataset = cfg.get("output", "reference_dataset").strip() or None
            rows = compare_reference(mean, ref, dataset)
            (tmp / "comparison.tsv").write_text(comparison_to_tsv(rows), encoding="utf-8")
            log.info("mean over %d runs\n%s", tc.runs, format_comparison(rows, dataset))
            save_checkpoint(result.models[0], tmp / "checkpoint.npz",
                            extra={"task_kind": cfg.get("data", "task_kind"),
                                   "scheme": cfg.get("reformulate", "scheme")},
                            arrays=checkpoint_arrays(enc))
            log.info("finished in %.1f s", time.time() - started)
        _publish(tmp, out_dir)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return out_dir


def run_grid(cfg: ExperimentConfig, out_dir: str | Path | None = None) -> Path:
    """Grid search on the validation split; writes ``grid.tsv`` and ``best.ini``."""
    out_dir = Path(out_dir) if out_dir else cfg.path("output", "dir")
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=".partial-", dir=out_dir.parent))
    try:
        with _LogCapture(tmp / "run.log"):
            (tmp / "config.ini").write_text(cfg.snapshot(), encoding="utf-8")
            grid = cfg.grid()
            data, items = prepare_data(cfg, need_valid=True)
            enc = data.encoder
            train_enc = enc.encode_dataset(data.train, items["train"])
            valid_enc = enc.encode_dataset(data.valid, items["valid"])
            tc = cfg.train_config()
            log.info("grid over %s, seed %d", dict(grid.params), tc.seed)

            def factory(cell, seed):
                model_keys = {k: _tuple_fields(v) for k, v in cell.items() if k not in TRAIN_KEYS}
                return build_classifier(cfg.family, model_config_for(cfg, enc, model_keys), seed)

            res = grid_search(factory, train_enc, valid_enc, grid, tc)
            names = sorted(grid.params)
            lines = ["\t".join(names + [grid.metric])]
            lines += ["\t".join([repr(cell[n]) for n in names] + [repr(v)]) for cell, v in res.cells]
            (tmp / "grid.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
            best = configparser.ConfigParser(interpolation=None)
            best["best"] = {n: repr(res.best[n]) for n in names}
            best["best"][grid.metric] = repr(res.best_score)
            with open(tmp / "best.ini", "w", encoding="utf-8") as fh:
                best.write(fh)
            log.info("best cell %s (%s %.4f)", res.best, grid.metric, res.best_score)
        _publish(tmp, out_dir)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return out_dir
