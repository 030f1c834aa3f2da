import numpy as np
import pytest
import scipy.sparse as ssp

from lglp.autodiff import (NonFiniteError, Param, Tape, adam_step, load_params, save_params,
                           softmax_cross_entropy)
from oracles import central_diff, rel_error


def random_adjacency(rng, n, p=0.3):
    a = np.triu(rng.random((n, n)) < p, 1).astype(float)
    return ssp.csr_matrix(a + a.T)


def op_cases(rng):
    """(name, input shapes, builder) triples with random dimensions."""
    r, c, k = (int(x) for x in rng.integers(1, 6, 3))
    adj = random_adjacency(rng, r)
    beta = rng.random(r) + 0.1
    idx = rng.integers(0, r, int(rng.integers(1, 6)))
    mask = rng.random((r, c)) * 2.0
    return [
        ("matmul", [(r, k), (k, c)], lambda t, a, b: t.matmul(a, b)),
        ("add", [(r, c), (r, c)], lambda t, a, b: t.add(a, b)),
        ("add_row", [(r, c), (1, c)], lambda t, a, b: t.add_row(a, b)),
        ("scale", [(r, c)], lambda t, a: t.scale(a, -1.7)),
        ("tanh", [(r, c)], lambda t, a: t.tanh(a)),
        ("relu", [(r, c)], lambda t, a: t.relu(a)),
        ("mask", [(r, c)], lambda t, a: t.mask(a, mask)),
        ("concat_cols", [(r, c), (r, k)], lambda t, a, b: t.concat_cols(a, b)),
        ("row_gather", [(r, c)], lambda t, a: t.row_gather(a, idx)),
        ("aggregate", [(r, c)], lambda t, a: t.aggregate(adj, beta, a)),
    ]


def grad_check(shapes, build, rng):
    params = [Param(rng.normal(size=s), f"p{i}") for i, s in enumerate(shapes)]
    for p in params:
        # keep relu inputs away from the kink
        p.value[np.abs(p.value) < 1e-3] = 0.5
    weight = None

    def value():
        t = Tape()
        out = build(t, *[t.param(p) for p in params])
        return t, out

    t, out = value()
    weight = rng.normal(size=out.shape)
    t.backward(out, weight)
    worst = 0.0
    for p in params:
        num = central_diff(lambda: float((value()[1].value * weight).sum()), p.value)
        worst = max(worst, rel_error(p.grad, num))
    return worst


@pytest.mark.parametrize("seed", range(10))
def test_every_op_finite_difference(seed):
    rng = np.random.default_rng(seed)
    for name, shapes, build in op_cases(rng):
        assert grad_check(shapes, build, rng) < 1e-4, name


def test_composite_finite_difference():
    rng = np.random.default_rng(42)
    adj = random_adjacency(rng, 6)
    beta = 1.0 / (1.0 + np.asarray(adj.sum(axis=1)).ravel())

    def build(t, x, w1, w2, b):
        z = t.tanh(t.matmul(t.aggregate(adj, beta, x), w1))
        z2 = t.tanh(t.matmul(t.aggregate(adj, beta, z), w2))
        h = t.concat_cols(t.row_gather(z, [0, 3]), t.row_gather(z2, [0, 3]))
        return t.add_row(t.relu(t.scale(h, 2.0)), b)

    assert grad_check([(6, 4), (4, 3), (3, 3), (1, 6)], build, rng) < 1e-4


def test_identity_and_aggregate_examples():
    t = Tape()
    a = np.arange(6.0).reshape(3, 2)
    assert np.array_equal(t.matmul(t.const(np.eye(3)), t.const(a)).value, a)
    empty = ssp.csr_matrix((3, 3))
    assert np.array_equal(t.aggregate(empty, np.full(3, 0.5), t.const(a)).value, a)
    path = ssp.csr_matrix(np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], float))
    out = t.aggregate(path, np.ones(3), t.const(a)).value
    assert out.tolist() == [[2, 4], [6, 9], [6, 8]]


def test_aggregate_permutation_equivariance():
    rng = np.random.default_rng(5)
    n = 8
    adj = random_adjacency(rng, n)
    beta = rng.random(n)
    z = rng.normal(size=(n, 3))
    perm = rng.permutation(n)
    p = ssp.csr_matrix((np.ones(n), (np.arange(n), perm)), shape=(n, n))
    t = Tape()
    out = t.aggregate(adj, beta, t.const(z)).value
    out_p = t.aggregate(p @ adj @ p.T, beta[perm], t.const(z[perm])).value
    assert np.allclose(out_p, out[perm], atol=1e-14)


def test_softmax_cross_entropy():
    loss, _ = softmax_cross_entropy(np.array([[0.0, 0.0]]), [1])
    assert loss == pytest.approx(np.log(2))
    loss, _ = softmax_cross_entropy(np.array([[-50.0, 50.0], [50.0, -50.0]]), [1, 0])
    assert loss < 1e-40
    rng = np.random.default_rng(0)
    logits = rng.normal(size=(5, 2))
    y = np.array([0, 1, 1, 0, 1])
    _, grad = softmax_cross_entropy(logits, y)
    num = central_diff(lambda: softmax_cross_entropy(logits, y)[0], logits)
    assert rel_error(grad, num) < 1e-6
    with pytest.raises(ValueError):
        softmax_cross_entropy(np.zeros((0, 2)), [])
    with pytest.raises(ValueError):
        softmax_cross_entropy(np.zeros((1, 2)), [2])


def test_backward_linear_examples():
    rng = np.random.default_rng(1)
    w = Param(rng.normal(size=(3, 2)), "w")
    unused = Param(rng.normal(size=(2, 2)), "unused")
    x = rng.normal(size=(1, 3))
    t = Tape()
    t.param(unused)
    out = t.matmul(t.const(x), t.param(w))
    t.backward(out, np.ones((1, 2)))
    assert np.allclose(w.grad, np.outer(x, np.ones(2)))
    assert not unused.grad.any()

    w.zero_grad()
    t = Tape()
    wv = t.param(w)
    twice = t.add(t.matmul(t.const(x), wv), t.matmul(t.const(x), wv))
    t.backward(twice, np.ones((1, 2)))
    assert np.allclose(w.grad, 2 * np.outer(x, np.ones(2)))


def test_backward_errors():
    with pytest.raises(RuntimeError):
        t = Tape()
        t.backward(t.const(np.ones((1, 1))))
    w = Param(np.ones((1, 1)))
    t = Tape()
    out = t.scale(t.param(w), 2.0)
    t.backward(out)
    with pytest.raises(RuntimeError):
        t.backward(out)


def test_shape_and_finiteness_errors():
    t = Tape()
    with pytest.raises(ValueError):
        t.matmul(t.const(np.ones((2, 3))), t.const(np.ones((2, 3))))
    with pytest.raises(ValueError):
        t.add(t.const(np.ones((2, 3))), t.const(np.ones((3, 2))))
    with pytest.raises(NonFiniteError):
        t.const(np.array([[np.nan]]))
    with pytest.raises(NonFiniteError):
        t.scale(t.const(np.ones((1, 1))), np.inf)


def test_adam_examples():
    p = Param(np.array([[1.0, -2.0]]))
    adam_step([p], lr=0.1)
    assert p.value.tolist() == [[1.0, -2.0]]

    p = Param(np.array([[1.0, -2.0]]))
    p.grad[:] = [[3.0, -0.5]]
    adam_step([p], lr=0.01)
    assert np.allclose(p.value, [[1.0 - 0.01, -2.0 + 0.01]], atol=1e-8)
    assert not p.grad.any()

    q = Param(np.array([[5.0]]))
    for _ in range(2000):
        q.grad[:] = 2 * (q.value - 1.5)
        adam_step([q], lr=0.05)
    assert (q.value[0, 0] - 1.5) ** 2 < 1e-6

    with pytest.raises(ValueError):
        adam_step([q], lr=0.0)


def test_checkpoint_round_trip(tmp_path):
    p = Param(np.arange(6.0).reshape(2, 3), "a")
    p.grad[:] = 1.0
    adam_step([p], lr=0.1)
    save_params([p], tmp_path / "c.npz")
    back = load_params(tmp_path / "c.npz")["a"]
    assert np.array_equal(back.value, p.value)
    assert np.array_equal(back.adam_m, p.adam_m)
    assert np.array_equal(back.adam_v, p.adam_v)
    assert back.step_count == 1
