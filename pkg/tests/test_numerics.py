import math
import threading

import numpy as np
import pytest

from sentipipe.numerics import (
    GradCheckError,
    Tensor,
    cross_entropy,
    grad_check,
    no_grad,
    ops,
    relative_error,
    softmax,
)
from sentipipe.numerics.tensor import grad_enabled


def P(rng, *shape, positive=False):
    data = rng.normal(size=shape)
    if positive:
        data = np.abs(data) + 0.5
    return Tensor(data, requires_grad=True)


def weighted(out: Tensor, rng_seed: int = 99) -> Tensor:
    """Scalar loss with a random (fixed) weighting so every output coordinate matters."""
    w = np.random.default_rng(rng_seed).normal(size=out.shape)
    return ops.tsum(ops.mul(out, w))


def _cases():
    def unary(fn, positive=False):
        def build(rng):
            x = P(rng, 3, 4, positive=positive)
            return {"x": x}, lambda: weighted(fn(x))
        return build

    def binary(fn, positive_b=False, shape_b=(3, 4)):
        def build(rng):
            a, b = P(rng, 3, 4), P(rng, *shape_b, positive=positive_b)
            return {"a": a, "b": b}, lambda: weighted(fn(a, b))
        return build

    def matmul(rng):
        a, b = P(rng, 2, 3, 4), P(rng, 4, 5)
        return {"a": a, "b": b}, lambda: weighted(ops.matmul(a, b))

    def layer_norm(rng):
        x, g, b = P(rng, 2, 3, 5), P(rng, 5), P(rng, 5)
        return {"x": x, "g": g, "b": b}, lambda: weighted(ops.layer_norm(x, g, b, 1e-5))

    def embedding(rng):
        w = P(rng, 6, 3)
        ids = np.array([[0, 2, 2], [5, 1, 0]])
        return {"w": w}, lambda: weighted(ops.embedding(w, ids))

    def unfold(rng):
        x = P(rng, 2, 6, 3)
        return {"x": x}, lambda: weighted(ops.unfold(x, 3))

    def structure(rng):
        a, b = P(rng, 2, 3), P(rng, 2, 3)
        def loss():
            c = ops.concat([a, b], axis=-1)
            s = ops.stack([a, b], axis=0)
            t = ops.transpose(ops.reshape(c, (3, 4)))
            return ops.add(weighted(t, 1), weighted(ops.getitem(s, (1, slice(None), 0)), 2))
        return {"a": a, "b": b}, loss

    def ce(rng):
        z = P(rng, 4, 3)
        gold = np.array([0, 2, 1, 2])
        return {"z": z}, lambda: ops.softmax_cross_entropy(z, gold)

    def hinge(rng):
        z = P(rng, 4, 3)
        gold = np.array([0, 2, 1, 2])
        return {"z": z}, lambda: ops.add(ops.multiclass_hinge(z, gold), ops.parameters_norm_sq([z]))

    def dropout(rng):
        x = P(rng, 3, 4)
        # same mask on every call: a fresh generator with a fixed seed
        return {"x": x}, lambda: weighted(ops.dropout(x, 0.5, np.random.default_rng(7), True))

    return {
        "add": binary(ops.add, shape_b=(4,)),
        "sub": binary(ops.sub),
        "mul": binary(ops.mul, shape_b=(3, 1)),
        "div": binary(ops.div, positive_b=True),
        "exp": unary(ops.exp),
        "log": unary(ops.log, positive=True),
        "tanh": unary(ops.tanh),
        "sigmoid": unary(ops.sigmoid),
        "relu": unary(ops.relu),
        "gelu": unary(ops.gelu),
        "mean": unary(lambda x: ops.mean(x, axis=0)),
        "max_over": unary(lambda x: ops.max_over(x, axis=1)),
        "softmax": unary(lambda x: ops.softmax(x, axis=-1)),
        "log_softmax": unary(lambda x: ops.log_softmax(x, axis=-1)),
        "matmul": matmul,
        "layer_norm": layer_norm,
        "embedding": embedding,
        "unfold": unfold,
        "structure": structure,
        "cross_entropy": ce,
        "hinge": hinge,
        "dropout": dropout,
    }


CASES = _cases()


@pytest.mark.parametrize("name", sorted(CASES))
def test_op_gradients(name):
    for seed in range(20):
        params, loss = CASES[name](np.random.default_rng(seed))
        report = grad_check(loss, params, seed=seed)
        assert report.passed, f"{name} seed {seed}\n{report.summary()}"


def test_quadratic_is_near_exact():
    rng = np.random.default_rng(0)
    w, x = P(rng, 4, 2), rng.normal(size=(5, 4))
    report = grad_check(lambda: ops.tsum(ops.mul(ops.matmul(Tensor(x), w), ops.matmul(Tensor(x), w))), {"w": w})
    assert report.max_error < 1e-8


def test_matmul_matches_triple_loop():
    rng = np.random.default_rng(3)
    a, b = rng.normal(size=(5, 5)), rng.normal(size=(5, 5))
    naive = [[sum(a[i, k] * b[k, j] for k in range(5)) for j in range(5)] for i in range(5)]
    assert np.allclose(ops.matmul(Tensor(a), Tensor(b)).data, naive, atol=1e-10, rtol=0)


def test_softmax_examples():
    assert np.allclose(softmax([0, 0, 0]), [1 / 3] * 3)
    x = np.array([0.3, -1.2, 2.0])
    assert np.allclose(softmax(x), softmax(x + 17.5))
    big = softmax([1000, 0, 0])
    assert big[0] == pytest.approx(1.0) and np.isfinite(big).all()
    assert np.argmax(softmax(x)) == np.argmax(x)
    with pytest.raises(ValueError):
        softmax([np.nan, 0, 0])


def test_cross_entropy_examples():
    assert cross_entropy([1, 0, 0], 0) == 0.0
    assert cross_entropy([1 / 3] * 3, 2) == pytest.approx(math.log(3))
    assert cross_entropy([0, 1, 0], 0) == pytest.approx(math.log(1e12))
    with pytest.raises(IndexError):
        cross_entropy([1, 0, 0], 3)


def test_relative_error_floor():
    assert relative_error(0.0, 0.0) == 0.0
    assert relative_error(1e-9, 0.0) == pytest.approx(0.1)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_grad_check_rejects_bad_inputs():
    x = Tensor(np.ones(3, dtype=np.float32), requires_grad=True, dtype=np.float32)
    with pytest.raises(GradCheckError):
        grad_check(lambda: ops.tsum(x), {"x": x})
    y = Tensor(np.ones(3), requires_grad=True)
    with pytest.raises(GradCheckError):
        grad_check(lambda: ops.tsum(ops.log(ops.sub(y, 1.0))), {"y": y})


def test_dropout_modes():
    x = Tensor(np.ones((200, 50)))
    assert ops.dropout(x, 0.5, None, False) is x
    y = ops.dropout(x, 0.5, np.random.default_rng(0), True).data
    assert set(np.unique(y)) <= {0.0, 2.0}
    assert abs(y.mean() - 1.0) < 0.05


def test_no_grad_is_thread_local():
    seen = []
    with no_grad():
        t = threading.Thread(target=lambda: seen.append(grad_enabled()))
        t.start()
        t.join()
        assert not grad_enabled()
    assert seen == [True] and grad_enabled()


def test_backward_accumulates_and_zero_grad():
    w = Tensor(np.array([1.0, 2.0]), requires_grad=True)
    ops.tsum(ops.mul(w, w)).backward()
    ops.tsum(ops.mul(w, w)).backward()
    assert np.allclose(w.grad, [4.0, 8.0])
    w.zero_grad()
    assert w.grad is None or not w.grad.any()
