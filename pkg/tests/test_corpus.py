import pytest

from sentipipe.corpus import (
    PUBLISHED_STATS,
    Dataset,
    DatasetError,
    Label,
    Sample,
    TaskKind,
    class_distribution,
    escape_field,
    load_dataset,
    split,
    unescape_field,
    write_dataset,
)

HEADER = "id\ttext\tentity\tlabel\n"


def write(tmp_path, body, name="d.tsv"):
    p = tmp_path / name
    p.write_text(HEADER + body, encoding="utf-8")
    return p


def test_load_preserves_order(tmp_path):
    p = write(tmp_path, "a\tСбербанк хорош\tСбербанк\tpositive\nb\tВТБ плох\tВТБ\t-1\nc\tМТС тут\tмтс\t0\n")
    ds = load_dataset(p, "targeted")
    assert [s.id for s in ds] == ["a", "b", "c"]
    assert ds.labels == [Label.POSITIVE, Label.NEGATIVE, Label.NEUTRAL]
    assert ds.task_kind is TaskKind.TARGETED


def test_general_allows_empty_entity(tmp_path):
    ds = load_dataset(write(tmp_path, "a\tтекст\t\t1\n"), "general")
    assert ds.samples[0].target_entity is None


@pytest.mark.parametrize(
    "body, fragment",
    [
        ("a\tx y\tx\n", ":2: expected 4 columns"),
        ("a\tx\tx\tgood\n", ":2: unknown label"),
        ("a\tx\tx\t1\na\tx\tx\t1\n", ":3: duplicate id"),
        ("a\tСбербанк\tВТБ\t1\n", ":2: "),
        ("a\tСбербанк\t\t1\n", "without entity"),
    ],
)
def test_load_errors_name_the_line(tmp_path, body, fragment):
    with pytest.raises(DatasetError, match=fragment):
        load_dataset(write(tmp_path, body), "targeted")


def test_bad_header_and_missing_file(tmp_path):
    p = tmp_path / "h.tsv"
    p.write_text("id\ttext\n", encoding="utf-8")
    with pytest.raises(DatasetError, match="header"):
        load_dataset(p, "general")
    with pytest.raises(FileNotFoundError):
        load_dataset(tmp_path / "nope.tsv", "general")


def test_escapes_round_trip(tmp_path):
    text = "line1\nline2\tcol \\ back"
    assert unescape_field(escape_field(text)) == text
    ds = Dataset("x", TaskKind.GENERAL, [Sample("1", text, Label.NEUTRAL)])
    write_dataset(ds, tmp_path / "o.tsv")
    again = load_dataset(tmp_path / "o.tsv", "general")
    assert again.samples == ds.samples


def test_class_distribution():
    samples = [Sample("1", "a", Label.POSITIVE), Sample("2", "b", Label.NEGATIVE),
               Sample("3", "c", Label.NEUTRAL), Sample("4", "d", Label.NEUTRAL)]
    dist = class_distribution(Dataset("x", TaskKind.GENERAL, samples))
    assert dist.rounded() == (25, 25, 50)
    one = class_distribution(Dataset("y", TaskKind.GENERAL, samples[:1]))
    assert one.rounded() == (100, 0, 0)


def test_split_partition_and_determinism():
    samples = [Sample(str(i), "t", Label(i % 3)) for i in range(10)]
    ds = Dataset("x", TaskKind.GENERAL, samples)
    a, b = split(ds, 0.8, seed=1)
    assert (len(a), len(b)) == (8, 2)
    assert split(ds, 0.8, seed=1)[0].samples == a.samples
    ids = sorted(s.id for s in a.samples + b.samples)
    assert ids == sorted(s.id for s in samples)
    with pytest.raises(DatasetError):
        split(ds, 0.01, seed=1)


def test_dataset_invariants():
    with pytest.raises(DatasetError):
        Dataset("x", TaskKind.GENERAL, [])
    with pytest.raises(DatasetError):
        Dataset("x", TaskKind.GENERAL, [Sample("1", "a", Label.POSITIVE)] * 2)


def test_published_stats_rows_sum_to_100():
    for _, _, train_pct, test_pct in PUBLISHED_STATS.values():
        assert abs(sum(train_pct) - 100) <= 1 and abs(sum(test_pct) - 100) <= 2
    assert PUBLISHED_STATS["sentirueval2016_banks"][0] == 9392
