"""Turn samples into single-sentence or sentence-pair model inputs.

Targeted samples have every occurrence of the entity replaced by the mask
token; general samples get the mask token prefixed as ``"MASK = <text>"``.
Pair schemes add an auxiliary sentence mentioning the mask token.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from sentipipe.corpus import DatasetError, Sample, TaskKind

DEFAULT_MASK = "MASK"


class Scheme(str, enum.Enum):
    SINGLE = "single"
    PAIR_QA = "pair_qa"
    PAIR_NLI = "pair_nli"

    @classmethod
    def parse(cls, raw: "str | Scheme") -> "Scheme":
        if isinstance(raw, Scheme):
            return raw
        key = raw.strip().lower().replace("-", "_")
        aliases = {"qa": "pair_qa", "nli": "pair_nli", "pairqa": "pair_qa", "pairnli": "pair_nli"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ValueError(f"unknown scheme {raw!r}") from None


# Auxiliary sentences; "{mask}" is filled with the configured mask token.
DEFAULT_PROMPTS: dict[Scheme, str] = {
    Scheme.PAIR_NLI: "The sentiment polarity of {mask} is",
    Scheme.PAIR_QA: "What do you think about {mask}?",
}


class EntityNotFound(DatasetError):
    pass


@dataclass(frozen=True)
class ReformulatedInput:
    sentence_a: str
    sentence_b: str | None = None
    mask_token: str = DEFAULT_MASK
    # original surface forms replaced by the mask, in order of appearance
    masked_surfaces: tuple[str, ...] = ()

    @property
    def is_pair(self) -> bool:
        return self.sentence_b is not None


def load_prompts(path: str | Path) -> dict[Scheme, str]:
    """Read a ``scheme<TAB>auxiliary sentence`` table over the defaults.

    The literal word ``MASK`` in a prompt stands for the mask token.
    """
    prompts = dict(DEFAULT_PROMPTS)
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected scheme<TAB>sentence")
        scheme = Scheme.parse(parts[0])
        if scheme is Scheme.SINGLE:
            raise ValueError(f"{path}:{lineno}: the single scheme takes no auxiliary sentence")
        prompt = parts[1].strip()
        if "{mask}" not in prompt:
            if DEFAULT_MASK not in prompt:
                raise ValueError(f"{path}:{lineno}: prompt must mention {DEFAULT_MASK}")
            prompt = prompt.replace(DEFAULT_MASK, "{mask}")
        prompts[scheme] = prompt
    return prompts


def auxiliary_sentence(
    scheme: Scheme, mask_token: str = DEFAULT_MASK, prompts: Mapping[Scheme, str] | None = None
) -> str | None:
    scheme = Scheme.parse(scheme)
    if scheme is Scheme.SINGLE:
        return None
    return (prompts or DEFAULT_PROMPTS)[scheme].format(mask=mask_token)


def reformulate_targeted(
    sample: Sample,
    scheme: Scheme | str,
    mask_token: str = DEFAULT_MASK,
    prompts: Mapping[Scheme, str] | None = None,
) -> ReformulatedInput:
    entity = sample.target_entity
    if not entity:
        raise EntityNotFound(f"sample {sample.id!r} has no target entity")
    rx = re.compile(re.escape(entity), re.IGNORECASE)
    surfaces = tuple(m.group() for m in rx.finditer(sample.text))
    if not surfaces:
        raise EntityNotFound(f"sample {sample.id!r}: entity {entity!r} not found in text")
    masked = rx.sub(lambda _: mask_token, sample.text)
    if rx.search(masked):
        raise ValueError(
            f"sample {sample.id!r}: entity {entity!r} overlaps the mask token {mask_token!r}"
        )
    return ReformulatedInput(masked, auxiliary_sentence(scheme, mask_token, prompts), mask_token, surfaces)


def reformulate_general(
    sample: Sample,
    scheme: Scheme | str,
    mask_token: str = DEFAULT_MASK,
    prompts: Mapping[Scheme, str] | None = None,
) -> ReformulatedInput:
    return ReformulatedInput(
        f"{mask_token} = {sample.text}",
        auxiliary_sentence(scheme, mask_token, prompts),
        mask_token,
    )


def reformulate(
    sample: Sample,
    task_kind: TaskKind | str,
    scheme: Scheme | str,
    mask_token: str = DEFAULT_MASK,
    prompts: Mapping[Scheme, str] | None = None,
) -> ReformulatedInput:
    if TaskKind.parse(task_kind) is TaskKind.TARGETED:
        return reformulate_targeted(sample, scheme, mask_token, prompts)
    return reformulate_general(sample, scheme, mask_token, prompts)


def unmask(item: ReformulatedInput) -> str:
    """Put the recorded entity surfaces back into ``sentence_a`` (targeted inputs)."""
    parts = item.sentence_a.split(item.mask_token)
    if len(parts) - 1 != len(item.masked_surfaces):
        raise ValueError("mask count does not match the recorded surfaces")
    out = [parts[0]]
    for surface, rest in zip(item.masked_surfaces, parts[1:]):
        out.append(surface)
        out.append(rest)
    return "".join(out)
