import numpy as np
import pytest

from sentipipe.metrics import EvalReport, evaluate
from sentipipe.models import build_classifier
from sentipipe.train import (
    Encoded,
    GridSpec,
    History,
    RunResult,
    TrainConfig,
    TrainingError,
    grid_search,
    run_n,
    score,
    train,
)
from toydata import OVERFIT_MODELS, separable


def linear_factory(seed):
    return build_classifier("linear", OVERFIT_MODELS["linear"], seed)


def test_linear_fits_separable_data():
    data = separable("linear")
    model = linear_factory(0)
    hist = train(model, data, TrainConfig(lr=0.05, epochs=200, batch_size=16))
    assert score(model, data).accuracy == 1.0
    assert len(hist.loss) == 200 and all(np.isfinite(hist.loss))
    assert not model.training


def test_same_seed_same_parameters():
    data = separable("cnn")
    cfg = TrainConfig(lr=0.01, epochs=3, batch_size=16, seed=4)
    a = build_classifier("cnn", OVERFIT_MODELS["cnn"], 4)
    b = build_classifier("cnn", OVERFIT_MODELS["cnn"], 4)
    train(a, data, cfg)
    train(b, data, cfg)
    sa, sb = a.state_dict(), b.state_dict()
    assert all(np.array_equal(sa[k], sb[k]) for k in sa)


@pytest.mark.parametrize("optimizer", ["sgd", "adam"])
def test_zero_learning_rate(optimizer):
    data = separable("lstm", n=12)
    model = build_classifier("lstm", OVERFIT_MODELS["lstm"], 0)
    before = model.state_dict()
    hist = train(model, data, TrainConfig(lr=0.0, epochs=3, optimizer=optimizer))
    assert all(np.array_equal(before[k], v) for k, v in model.state_dict().items())
    assert hist.loss[0] == hist.loss[1] == hist.loss[2]


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
@pytest.mark.parametrize("family", ["linear", "cnn"])
def test_non_finite_loss_aborts(family):
    data = separable(family, n=8)
    x = data.features["x"].copy()
    x[...] = np.inf
    bad = Encoded({**data.features, "x": x}, data.labels)
    model = build_classifier(family, OVERFIT_MODELS[family], 0)
    with pytest.raises(TrainingError, match="non-finite loss .* epoch 1, batch starting 0"):
        train(model, bad, TrainConfig(epochs=1))


def test_empty_and_invalid_config():
    with pytest.raises(TrainingError):
        train(linear_factory(0), Encoded({"x": np.zeros((0, 8))}, np.zeros(0, dtype=int)), TrainConfig())
    with pytest.raises(ValueError):
        TrainConfig(batch_size=0)
    with pytest.raises(ValueError):
        TrainConfig(optimizer="rmsprop")


def test_history_tsv():
    h = History([0.5, 0.25], [None, 0.75])
    assert h.to_tsv() == "epoch\tloss\tvalid_metric\n1\t0.5\t\n2\t0.25\t0.75\n"


def test_run_n_seeds_and_mean():
    data = separable("linear", n=30)
    cfg = TrainConfig(lr=0.05, epochs=5, runs=3, seed=10)
    res = run_n(linear_factory, data, data, cfg, valid=data)
    assert res.seeds == [10, 11, 12]
    for name, value in res.mean.items():
        values = [getattr(r, name) for r in res.reports]
        assert min(values) - 1e-15 <= value <= max(values) + 1e-15
    again = run_n(linear_factory, data, data, cfg, valid=data)
    assert [r.to_tsv() for r in again.reports] == [r.to_tsv() for r in res.reports]
    one = run_n(linear_factory, data, data, TrainConfig(lr=0.05, epochs=5, runs=1))
    assert one.mean == one.reports[0].metrics()


def test_mean_arithmetic():
    def rep(acc):
        r = evaluate([0], [0])
        return EvalReport(acc, 0.0, 0.0, 0.0, r.per_class, 1)

    res = RunResult([rep(a) for a in (0.7, 0.72, 0.71, 0.69, 0.73)], [], [])
    assert res.mean["accuracy"] == pytest.approx(0.71)


def test_grid_cells_and_tie_break():
    data = separable("linear", n=30)
    seen = []

    def factory(cell, seed):
        seen.append(dict(cell))
        return build_classifier("linear", {"dim": 8, "l2": cell["l2"]}, seed)

    grid = GridSpec({"l2": [0.1, 0.001], "lr": [0.05, 0.01]})
    res = grid_search(factory, data, data, grid, TrainConfig(epochs=20))
    assert len(res.cells) == 4 and len(seen) == 4
    assert [c for c, _ in res.cells] == grid.cells()
    assert grid.cells()[0] == {"l2": 0.001, "lr": 0.01}
    top = max(v for _, v in res.cells)
    assert res.best == next(c for c, v in res.cells if v == top)

    single = grid_search(factory, data, data, GridSpec({"l2": [0.1]}), TrainConfig(epochs=1))
    assert single.best == {"l2": 0.1}
    with pytest.raises(ValueError):
        GridSpec({"l2": []}).cells()


def test_grid_equal_scores_pick_first():
    data = separable("linear", n=12)

    def factory(cell, seed):
        return build_classifier("linear", {"dim": 8}, seed)

    # lr 0 leaves every cell identical, so all scores tie
    res = grid_search(factory, data, data, GridSpec({"lr": [0.0], "tag": ["b", "a", "c"]}), TrainConfig(epochs=1))
    assert res.best == {"lr": 0.0, "tag": "a"}
