import numpy as np
import pytest
import scipy.sparse as ssp

from lglp.autodiff import softmax
from lglp.datasets import generate
from lglp.errors import ConfigError, DataError
from lglp.graph import build_graph, relabel
from lglp.linegraph import LineGraph
from lglp.model import (LGLPModel, ModelConfig, TrainConfig, collate, fit, forward,
                        line_graph_for, predict, prepare, train)
from lglp.split import split_links
from oracles import central_diff, rel_error

TINY = ModelConfig(num_layers=2, channels=3, mlp_hidden=4, dropout=0.0, label_cap=4)


def path_line_graph(n, cap=4, seed=0):
    rng = np.random.default_rng(seed)
    a = np.zeros((n, n))
    for i in range(n - 1):
        a[i, i + 1] = a[i + 1, i] = 1
    x = np.zeros((n, 2 * cap))
    x[np.arange(n), rng.integers(0, cap, n)] = 1
    x[np.arange(n), cap + rng.integers(0, cap, n)] = 1
    edges = np.stack([np.arange(n), np.arange(n) + 1], axis=1)
    return LineGraph(edges, ssp.csr_matrix(a), x, 0)


def dense_logits(model, lg):
    a = lg.adjacency.toarray()
    beta = 1.0 / (1.0 + a.sum(axis=1))
    z = lg.node_attrs
    reads = []
    for w in model.conv:
        z = np.tanh((z + beta[:, None] * (a @ z)) @ w.value)
        reads.append(z[lg.target_index])
    h = np.maximum(np.concatenate(reads) @ model.w1.value + model.b1.value[0], 0)
    return h @ model.w2.value + model.b2.value[0]


def test_dense_oracle_five_nodes():
    model = LGLPModel(TINY, seed=3)
    model.b1.value[:] = 0.1
    model.b2.value[:] = [0.2, -0.3]
    lg = path_line_graph(5)
    lg = LineGraph(lg.edge_index, lg.adjacency, lg.node_attrs, 2)
    assert np.allclose(forward(model, lg), dense_logits(model, lg), atol=1e-13)


def test_single_isolated_node():
    model = LGLPModel(ModelConfig(), seed=0)
    g = build_graph([(2, 3)], 4)
    lg = line_graph_for(g, 0, 1, model.config)
    assert lg.num_nodes == 1
    out = forward(model, lg)
    assert np.isfinite(out).all()
    assert np.allclose(out, dense_logits(model, lg), atol=1e-13)
    assert 0 < predict(model, g, [(0, 1)])[0] < 1


def test_permutation_invariance():
    g = generate("planted:n=60,k=3,p_in=0.3,p_out=0.02,seed=1")
    model = LGLPModel(ModelConfig(), seed=0)
    lg = line_graph_for(g, 0, 5, model.config)
    perm = np.random.default_rng(0).permutation(lg.num_nodes)
    assert np.abs(forward(model, lg) - forward(model, lg.permuted(perm))).max() <= 1e-12


def test_receptive_field():
    model = LGLPModel(TINY, seed=1)
    lg = path_line_graph(8)
    base = forward(model, lg)
    far = lg.node_attrs.copy()
    far[3:] = np.random.default_rng(2).random((5, 8))
    out = forward(model, LineGraph(lg.edge_index, lg.adjacency, far, 0))
    assert np.array_equal(base, out)
    near = lg.node_attrs.copy()
    near[2] = 0.5
    assert not np.array_equal(base, forward(model, LineGraph(lg.edge_index, lg.adjacency,
                                                             near, 0)))


def test_end_to_end_gradient():
    g = build_graph([(0, 2), (1, 2), (2, 3), (1, 3), (3, 4)], 5)
    model = LGLPModel(TINY, seed=4)
    rng = np.random.default_rng(0)
    for p in model.params:
        p.value[:] = rng.normal(size=p.shape)
    batch = collate([line_graph_for(g, 0, 1, TINY), line_graph_for(g, 0, 4, TINY)])
    labels = np.array([1, 0])
    model.loss_and_grad(batch, labels)
    for p in model.params:
        num = central_diff(lambda: model_loss(model, batch, labels), p.value)
        assert rel_error(p.grad, num) < 1e-4, p.name


def model_loss(model, batch, labels):
    from lglp.autodiff import Tape, softmax_cross_entropy
    return softmax_cross_entropy(model.logits(Tape(), batch).value, labels)[0]


def test_input_width_mismatch():
    model = LGLPModel(TINY)
    with pytest.raises(DataError):
        forward(model, path_line_graph(3, cap=5))


@pytest.fixture(scope="module")
def small_split():
    g = generate("planted:n=80,k=8,p_in=0.6,p_out=0.005,seed=2")
    return split_links(g, 0.8, 0)


def test_training_determinism_and_descent(small_split):
    tcfg = TrainConfig(epochs=3, lr=1e-3)
    a = train(small_split, ModelConfig(), tcfg, model_seed=5)
    b = train(small_split, ModelConfig(), tcfg, model_seed=5)
    la = [h.train_loss for h in a.history]
    assert la == [h.train_loss for h in b.history]
    assert all(np.isfinite(la)) and la[-1] < la[0]
    for p, q in zip(a.model.params, b.model.params):
        assert np.array_equal(p.value, q.value)


def test_worker_count_does_not_change_inputs(small_split):
    pairs, _ = small_split.train_pairs()
    one = prepare(small_split.observed, pairs[:40], ModelConfig(), workers=1)
    two = prepare(small_split.observed, pairs[:40], ModelConfig(), workers=2)
    for x, y in zip(one, two):
        assert np.array_equal(x.node_attrs, y.node_attrs)
        assert (x.adjacency != y.adjacency).nnz == 0


def test_predict_symmetry_and_range(small_split):
    model = LGLPModel(ModelConfig(), seed=0)
    g = small_split.observed
    s = predict(model, g, [(3, 17), (17, 3), (0, 40)])
    assert s[0] == s[1]
    assert ((s > 0) & (s < 1)).all()
    with pytest.raises(DataError):
        predict(model, g, [(4, 4)])


def test_single_class_rejected(small_split):
    from dataclasses import replace
    bad = replace(small_split, train_neg=np.zeros((0, 2), dtype=np.int64))
    with pytest.raises(DataError):
        train(bad, ModelConfig(), TrainConfig(epochs=1))
    with pytest.raises(ConfigError):
        train(small_split, ModelConfig(attr_dim=3), TrainConfig(epochs=1))


def test_save_load(tmp_path, small_split):
    model = train(small_split, ModelConfig(), TrainConfig(epochs=1)).model
    model.save(tmp_path / "ck", extra={"note": 1})
    back = LGLPModel.load(tmp_path / "ck")
    pairs, _ = small_split.test_pairs()
    assert np.array_equal(predict(model, small_split.observed, pairs[:20]),
                          predict(back, small_split.observed, pairs[:20]))
    with pytest.raises(DataError):
        LGLPModel.load(tmp_path / "missing")


def test_dropout_only_in_training():
    model = LGLPModel(ModelConfig(dropout=0.5), seed=0)
    lg = path_line_graph(4, cap=32)
    assert np.array_equal(forward(model, lg), forward(model, lg))
    from lglp.autodiff import Tape
    batch = collate([lg])
    rng = np.random.default_rng(0)
    outs = {tuple(model.logits(Tape(), batch, True, rng).value[0]) for _ in range(5)}
    assert len(outs) > 1
    with pytest.raises(ValueError):
        model.logits(Tape(), batch, True, None)


def test_relabelled_graph_same_scores(small_split):
    model = train(small_split, ModelConfig(), TrainConfig(epochs=1)).model
    g = small_split.observed
    perm = np.random.default_rng(1).permutation(g.num_nodes)
    pairs, _ = small_split.test_pairs()
    a = predict(model, g, pairs)
    b = predict(model, relabel(g, perm), perm[pairs])
    assert np.abs(a - b).max() <= 1e-9


def test_fit_uses_prebuilt_graphs(small_split):
    cfg = ModelConfig()
    pairs, y = small_split.train_pairs()
    lgs = prepare(small_split.observed, pairs, cfg)
    res = fit(lgs, y, [], np.array([]), np.zeros((0, 2)), cfg, TrainConfig(epochs=1))
    assert res.history[0].test_auc is None
    model, history = res
    probs = softmax(np.stack([forward(model, lg) for lg in lgs[:3]]))
    assert np.allclose(probs.sum(axis=1), 1.0)
