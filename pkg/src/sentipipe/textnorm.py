"""Tweet normalization as an ordered sequence of rewrite steps.

Steps always run in this order, each at most once::

    lowercase, url, mention, hashtag, email, phone, emoticon,
    strip_special, squash_repeats, lemma_stop

Pattern table (all single pass, leftmost match, greedy):

=========  ==================================================================  =========
step       pattern                                                             token
=========  ==================================================================  =========
url        ``(?<!\\w)(?:https?://|www\\.)\\S+`` (case-insensitive)                url
mention    ``(?<!\\w)@\\w+``                                                     user
hashtag    ``(?<!\\w)#\\w+``                                                     hashtag
email      ``[\\w.+-]+@[\\w-]+(?:\\.[\\w-]+)+``                                  email
phone      optional ``+`` and 1-3 digit country prefix, then digit groups       phone
           3-3-2-2; any non-word characters may separate the groups
=========  ==================================================================  =========

Pattern tokens get a leading space (the text after a match is already a
non-word boundary) and each pattern step repeats until nothing matches, so a
replacement never exposes a new match.  Emoticon tokens follow the same
rule, with a trailing space only when the emoticon ends in a non-word
character.  Whitespace is collapsed at the end.  ``strip_special`` replaces
every character that is not a letter, number, whitespace or Unicode
punctuation (``P*`` categories) with a space, so removal cannot fuse the
neighbouring text.  ``squash_repeats`` touches letters only.
"""

from __future__ import annotations

import enum
import re
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

REPLACEMENT_TOKENS = frozenset(
    {"url", "user", "hashtag", "email", "phone", "sad", "happy", "neutral"}
)
DEFAULT_MASK = "MASK"


class NormStep(str, enum.Enum):
    LOWERCASE = "lowercase"
    URL = "url"
    MENTION = "mention"
    HASHTAG = "hashtag"
    EMAIL = "email"
    PHONE = "phone"
    EMOTICON = "emoticon"
    STRIP_SPECIAL = "strip_special"
    SQUASH_REPEATS = "squash_repeats"
    LEMMA_STOP = "lemma_stop"


STEP_ORDER = tuple(NormStep)
DEFAULT_STEPS = tuple(s for s in STEP_ORDER if s is not NormStep.LEMMA_STOP)

URL_RE = re.compile(r"(?<!\w)(?:https?://|www\.)\S+", re.IGNORECASE)
MENTION_RE = re.compile(r"(?<!\w)@\w+")
HASHTAG_RE = re.compile(r"(?<!\w)#\w+")
EMAIL_RE = re.compile(r"[\w.+-]+@[\w-]+(?:\.[\w-]+)+")
_SEP = r"\W*"
PHONE_RE = re.compile(
    rf"(?<!\w)(?:\+?\d{{1,3}}{_SEP})?\d{{3}}{_SEP}\d{{3}}{_SEP}\d{{2}}{_SEP}\d{{2}}(?!\w)"
)

PATTERNS = {
    NormStep.URL: (URL_RE, "url"),
    NormStep.MENTION: (MENTION_RE, "user"),
    NormStep.HASHTAG: (HASHTAG_RE, "hashtag"),
    NormStep.EMAIL: (EMAIL_RE, "email"),
    NormStep.PHONE: (PHONE_RE, "phone"),
}

# ASCII emoticons plus bracket runs, as used in Russian tweets.  Matched
# case-insensitively so ":D" survives lowercasing.
DEFAULT_EMOTICONS: dict[str, str] = {
    r"[:;=]-?[)\]]+": "happy",
    r"[:;=]-?d+(?![^\W\d_])": "happy",
    r"\){2,}": "happy",
    r"[:;=]-?[(\[]+": "sad",
    r"\({2,}": "sad",
    r"[:;=]-?\|": "neutral",
}

_LETTER_RUN = re.compile(r"([^\W\d_])\1{2,}")
_TOKEN_RE = re.compile(r"\w+|[^\w\s]+")


class NormConfigError(ValueError):
    pass


Lemmatizer = Callable[[str], str]


def identity_lemmatizer(token: str) -> str:
    return token


class DictionaryLemmatizer:
    """Lemmatizer backed by a ``surface<TAB>lemma`` file; unknown words pass through."""

    def __init__(self, table: Mapping[str, str]):
        self.table = dict(table)

    @classmethod
    def from_file(cls, path: str | Path) -> "DictionaryLemmatizer":
        table = {}
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise NormConfigError(f"{path}:{lineno}: expected surface<TAB>lemma")
            table[parts[0]] = parts[1]
        return cls(table)

    def __call__(self, token: str) -> str:
        return self.table.get(token, token)


@dataclass(frozen=True)
class NormConfig:
    steps: tuple[NormStep, ...] = DEFAULT_STEPS
    stopwords: frozenset[str] | None = None
    emoticons: Mapping[str, str] = field(default_factory=lambda: dict(DEFAULT_EMOTICONS))
    lemmatizer: Lemmatizer = identity_lemmatizer

    def __post_init__(self):
        steps = tuple(NormStep(s) for s in self.steps)
        if len(set(steps)) != len(steps):
            raise NormConfigError("duplicate normalization step")
        object.__setattr__(self, "steps", tuple(s for s in STEP_ORDER if s in steps))
        if NormStep.LEMMA_STOP in steps and self.stopwords is None:
            raise NormConfigError("lemma_stop requires a stopword list")
        for token in self.emoticons.values():
            if token not in ("happy", "sad", "neutral"):
                raise NormConfigError(f"emoticon token must be happy/sad/neutral, got {token!r}")
        object.__setattr__(
            self,
            "_emoticon_res",
            tuple((re.compile(p, re.IGNORECASE), t) for p, t in self.emoticons.items()),
        )

    @classmethod
    def build(
        cls,
        steps: Iterable[str | NormStep] = DEFAULT_STEPS,
        stopword_path: str | Path | None = None,
        emoticon_path: str | Path | None = None,
        lemma_path: str | Path | None = None,
    ) -> "NormConfig":
        """Construct a config from file paths, loading each referenced file."""
        kwargs = {"steps": tuple(NormStep(s) for s in steps)}
        if stopword_path is not None:
            kwargs["stopwords"] = load_stopwords(stopword_path)
        if emoticon_path is not None:
            kwargs["emoticons"] = load_emoticons(emoticon_path)
        if lemma_path is not None:
            kwargs["lemmatizer"] = DictionaryLemmatizer.from_file(lemma_path)
        return cls(**kwargs)


def load_stopwords(path: str | Path) -> frozenset[str]:
    path = Path(path)
    if not path.is_file():
        raise NormConfigError(f"stopword file not found: {path}")
    return frozenset(w.strip() for w in path.read_text(encoding="utf-8").splitlines() if w.strip())


def load_emoticons(path: str | Path) -> dict[str, str]:
    table = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise NormConfigError(f"{path}:{lineno}: expected pattern<TAB>token")
        table[parts[0]] = parts[1].strip()
    return table


def tokenize(text: str) -> list[str]:
    """Split into word runs and punctuation runs."""
    return _TOKEN_RE.findall(text)


def _sub_until_stable(rx: re.Pattern, repl: str, text: str) -> str:
    while True:
        new = rx.sub(repl, text)
        if new == text:
            return text
        text = new


def replace_emoticons(text: str, patterns: Sequence[tuple[re.Pattern, str]]) -> str:
    out = []
    pos = 0
    last = 0
    n = len(text)
    while pos < n:
        best_end, best_token = -1, None
        for rx, token in patterns:
            m = rx.match(text, pos)
            if m and m.end() > pos and m.end() > best_end:
                best_end, best_token = m.end(), token
        if best_token is None:
            pos += 1
            continue
        out.append(text[last:pos])
        # a trailing word character may be shielding a following "@"/"#"
        glue = text[best_end - 1].isalnum() or text[best_end - 1] == "_"
        out.append(" " + best_token + ("" if glue else " "))
        pos = last = best_end
    out.append(text[last:])
    return "".join(out)


def _keep(ch: str) -> bool:
    if ch.isspace():
        return True
    cat = unicodedata.category(ch)
    return cat[0] in "LNP"


def strip_special(text: str) -> str:
    return "".join(ch if _keep(ch) else " " for ch in text)


def squash_repeats(text: str) -> str:
    return _LETTER_RUN.sub(r"\1\1", text)


def lemma_stop(
    tokens: Sequence[str],
    stopwords: Iterable[str],
    lemmatizer: Lemmatizer = identity_lemmatizer,
    protected: Iterable[str] = (),
) -> list[str]:
    """Lemmatize, then drop stopwords; replacement tokens are never touched."""
    stop = set(stopwords)
    keep = REPLACEMENT_TOKENS | set(protected)
    out = []
    for tok in tokens:
        if tok in keep:
            out.append(tok)
            continue
        lemma = lemmatizer(tok)
        if lemma not in stop:
            out.append(lemma)
    return out


def _normalize_piece(text: str, config: NormConfig, protected: Sequence[str]) -> str:
    steps = config.steps
    if NormStep.LOWERCASE in steps:
        text = text.lower()
    for step in (NormStep.URL, NormStep.MENTION, NormStep.HASHTAG, NormStep.EMAIL, NormStep.PHONE):
        if step in steps:
            rx, token = PATTERNS[step]
            text = _sub_until_stable(rx, " " + token, text)
    if NormStep.EMOTICON in steps:
        text = replace_emoticons(text, config._emoticon_res)
    if NormStep.STRIP_SPECIAL in steps:
        text = strip_special(text)
    if NormStep.SQUASH_REPEATS in steps:
        text = squash_repeats(text)
    if NormStep.LEMMA_STOP in steps:
        tokens = lemma_stop(tokenize(text), config.stopwords, config.lemmatizer, protected)
        text = " ".join(tokens)
    return " ".join(text.split())


def normalize(text: str, config: NormConfig | None = None, protect: Sequence[str] = ()) -> str:
    """Apply the enabled steps to ``text``.

    Occurrences of any string in ``protect`` (typically the mask token) are
    passed through verbatim and kept as separate words.
    """
    config = config or NormConfig()
    protect = [p for p in protect if p]
    if not protect:
        return _normalize_piece(text, config, ())
    splitter = re.compile("(" + "|".join(re.escape(p) for p in protect) + ")")
    parts = splitter.split(text)
    pieces = []
    for i, part in enumerate(parts):
        if i % 2:
            pieces.append(part)
        else:
            normed = _normalize_piece(part, config, protect)
            if normed:
                pieces.append(normed)
    return " ".join(pieces)


def find_pattern_matches(text: str) -> list[tuple[str, str]]:
    """Return ``(step, matched text)`` for every replaceable pattern still present."""
    hits = []
    for step, (rx, _) in PATTERNS.items():
        hits.extend((step.value, m.group()) for m in rx.finditer(text))
    return hits
