import pytest

from sentipipe.corpus import Dataset, Label, Sample, TaskKind
from sentipipe.pipeline import item_tokens, prepare
from sentipipe.reformulate import (
    EntityNotFound,
    Scheme,
    auxiliary_sentence,
    load_prompts,
    reformulate,
    unmask,
)
from sentipipe.textnorm import NormConfig

SAFE = Sample("1", "Sberbank is a safe place where you can keep your savings", Label.POSITIVE, "Sberbank")
SOLD = Sample("2", "56% of Rambler Group was sold to Sberbank", Label.NEUTRAL)


def test_targeted_schemes():
    single = reformulate(SAFE, "targeted", "single")
    assert single.sentence_a == "MASK is a safe place where you can keep your savings"
    assert single.sentence_b is None
    nli = reformulate(SAFE, "targeted", "pair_nli")
    assert (nli.sentence_a, nli.sentence_b) == (single.sentence_a, "The sentiment polarity of MASK is")
    qa = reformulate(SAFE, "targeted", "pair_qa")
    assert qa.sentence_b == "What do you think about MASK?"


def test_general_prefix():
    assert reformulate(SOLD, "general", "single").sentence_a == "MASK = 56% of Rambler Group was sold to Sberbank"
    assert reformulate(Sample("3", "", Label.NEUTRAL), "general", "single").sentence_a == "MASK = "
    assert reformulate(SOLD, "general", Scheme.PAIR_NLI).sentence_b == "The sentiment polarity of MASK is"


def test_every_occurrence_case_insensitive_and_unmask():
    s = Sample("4", "sberbank vs SBERBANK vs Sberbank", Label.NEUTRAL, "Sberbank")
    item = reformulate(s, "targeted", "single")
    assert item.sentence_a == "MASK vs MASK vs MASK"
    assert item.masked_surfaces == ("sberbank", "SBERBANK", "Sberbank")
    assert unmask(item) == s.text


def test_missing_entity():
    with pytest.raises(EntityNotFound):
        reformulate(Sample("5", "nothing here", Label.NEUTRAL, "Sberbank"), "targeted", "single")


def test_scheme_aliases_and_prompts(tmp_path):
    assert Scheme.parse("nli") is Scheme.PAIR_NLI
    assert Scheme.parse("pair-qa") is Scheme.PAIR_QA
    with pytest.raises(ValueError):
        Scheme.parse("triple")
    p = tmp_path / "p.tsv"
    p.write_text("pair_nli\tТональность MASK\n", encoding="utf-8")
    prompts = load_prompts(p)
    assert auxiliary_sentence(Scheme.PAIR_NLI, "MASK", prompts) == "Тональность MASK"
    assert auxiliary_sentence(Scheme.PAIR_QA, "MASK", prompts) == "What do you think about MASK?"


def test_prepare_normalizes_around_mask():
    ds = Dataset("d", TaskKind.TARGETED, [Sample("1", "Сбербанк СУПЕР!!! :) http://t.co/x", Label.POSITIVE, "сбербанк")])
    (item,) = prepare(ds, "pair_nli", NormConfig())
    assert item.sentence_a == "MASK супер!!! happy url"
    assert item_tokens(item)[:2] == ["MASK", "супер"]
    gen = Dataset("g", TaskKind.GENERAL, [Sample("1", "Всё ОК #тег", Label.POSITIVE)])
    (g,) = prepare(gen, "single", NormConfig())
    assert g.sentence_a == "MASK = всё ок hashtag"
