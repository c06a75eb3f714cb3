import numpy as np
import pytest

from componentpool.checkpoint import ContainerError, load_model, save_model
from componentpool.graph import build_graph
from componentpool.nn import (
    Model,
    ModelConfig,
    Parameter,
    UsageError,
    batch_graphs,
    count_parameters,
    cross_entropy_loss,
    gcn_layer_forward,
    global_sum_pool,
    linear_forward,
    normalized_adjacency,
    softmax,
)
from componentpool.optim import Adam, halved_learning_rate

from conftest import random_graph, relative_error


class TestGCNForward:
    def test_single_node_self_loop_normalization(self):
        g = build_graph(1, [], np.array([[-1.0, 2.0]]))
        out = gcn_layer_forward(g, g.features, np.eye(2), np.zeros(2))
        assert np.array_equal(out, [[0.0, 2.0]])

    def test_symmetric_inputs_give_equal_rows(self, rng):
        x = rng.uniform(size=(1, 3)).repeat(2, axis=0)
        g = build_graph(2, [(0, 1)], x)
        w = rng.standard_normal((3, 4))
        out = gcn_layer_forward(g, g.features, w, np.zeros(4))
        assert np.allclose(out[0], out[1])

    def test_path_matches_dense_oracle(self):
        g = build_graph(3, [(0, 1), (1, 2)], np.array([[1.0], [2.0], [3.0]]))
        a_hat = np.array([[1, 1, 0], [1, 1, 1], [0, 1, 1]], dtype=float)
        a_hat += np.eye(3) * 0  # A + I already encoded above
        deg = a_hat.sum(axis=1)
        norm = np.diag(deg**-0.5)
        expected = np.maximum(norm @ a_hat @ norm @ g.features, 0.0)
        out = gcn_layer_forward(g, g.features, np.eye(1), np.zeros(1))
        assert np.allclose(out, expected, atol=1e-12)

    def test_permutation_equivariance(self, rng):
        g = random_graph(rng, min_nodes=3, feature_dim=2)
        w = rng.standard_normal((2, 3))
        b = rng.standard_normal(3)
        perm = rng.permutation(g.num_nodes)
        permuted = build_graph(
            g.num_nodes,
            perm[g.edges] if g.num_edges else g.edges,
            g.features[np.argsort(perm)],
        )
        base = gcn_layer_forward(g, g.features, w, b)
        out = gcn_layer_forward(permuted, permuted.features, w, b)
        assert np.allclose(out[perm], base, atol=1e-12)

    def test_normalized_adjacency_symmetric(self, rng):
        g = random_graph(rng, min_nodes=3)
        p = normalized_adjacency(g).toarray()
        assert np.allclose(p, p.T)


class TestLinearForward:
    def test_identity_passthrough(self, rng):
        x = rng.uniform(size=(3, 4))
        assert np.array_equal(linear_forward(x, np.eye(4), np.zeros(4), "identity"), x)

    def test_softmax_symmetry(self):
        out = linear_forward(np.zeros((1, 2)), np.eye(2), np.zeros(2), "softmax")
        assert np.allclose(out, [[0.5, 0.5]])

    def test_matches_dense_oracle(self, rng):
        x = rng.uniform(size=(2, 3))
        w = rng.standard_normal((3, 5))
        b = rng.standard_normal(5)
        assert np.allclose(linear_forward(x, w, b, "identity"), x @ w + b)
        assert np.allclose(
            linear_forward(x, w, b, "relu"), np.maximum(x @ w + b, 0)
        )

    def test_softmax_rows_sum_to_one(self, rng):
        z = rng.standard_normal((10, 5)) * 10
        assert np.allclose(softmax(z).sum(axis=1), 1.0, atol=1e-12)

    def test_sigmoid_in_open_interval(self, rng):
        out = linear_forward(rng.standard_normal((5, 2)), np.eye(2), np.zeros(2), "sigmoid")
        assert np.all((out > 0) & (out < 1))

    def test_shape_mismatch(self):
        from componentpool.pooling import ShapeError

        with pytest.raises(ShapeError):
            linear_forward(np.ones((2, 3)), np.ones((4, 2)), np.zeros(2), "identity")


class TestGlobalSumPool:
    def test_columnwise_sum(self):
        assert global_sum_pool(np.array([[1.0, 2.0], [3.0, 4.0]])).tolist() == [4.0, 6.0]

    def test_empty_matrix_zero_vector(self):
        out = global_sum_pool(np.empty((0, 3)))
        assert np.array_equal(out, np.zeros(3))

    def test_permutation_invariance(self, rng):
        x = rng.standard_normal((7, 4))
        perm = rng.permutation(7)
        assert np.allclose(global_sum_pool(x), global_sum_pool(x[perm]))

    def test_segmented_sum(self):
        x = np.array([[1.0], [2.0], [10.0]])
        ids = np.array([0, 0, 1])
        out = global_sum_pool(x, ids, 2)
        assert out.tolist() == [[3.0], [10.0]]


class TestCrossEntropy:
    def test_uniform_binary(self):
        assert cross_entropy_loss(np.array([[0.5, 0.5]]), [0]) == pytest.approx(np.log(2))

    def test_perfect_prediction(self):
        assert cross_entropy_loss(np.array([[0.0, 1.0]]), [1]) == pytest.approx(0.0)

    def test_scalar_recomputation(self):
        loss = cross_entropy_loss(np.array([[0.7, 0.3]]), [0])
        assert loss == pytest.approx(-np.log(0.7))
        assert loss == pytest.approx(0.35667, abs=1e-5)

    def test_zero_probability_clamped(self):
        loss = cross_entropy_loss(np.array([[0.0, 1.0]]), [0])
        assert loss == pytest.approx(-np.log(1e-12))


class TestAdam:
    def test_zero_gradient_keeps_parameters(self):
        p = Parameter("w", np.ones(3))
        opt = Adam([p], learning_rate=0.1)
        opt.step()
        assert np.array_equal(p.value, np.ones(3))

    def test_single_step_reference_value(self):
        # reference Adam: m=0.1, v=0.001; update = lr * mhat / (sqrt(vhat)+eps)
        p = Parameter("w", np.array([1.0]))
        p.grad[...] = 1.0
        opt = Adam([p], learning_rate=0.001)
        opt.step()
        m_hat, v_hat = 0.1 / 0.1, 0.001 / 0.001
        expected = 1.0 - 0.001 * m_hat / (np.sqrt(v_hat) + 1e-8)
        assert p.value[0] == pytest.approx(expected, abs=1e-12)
        assert 1.0 - p.value[0] == pytest.approx(0.000999999, abs=1e-8)

    def test_lr_halving_schedule(self):
        # 200-epoch run halving every 100: epochs 0-99 full LR, 100-199 half
        assert halved_learning_rate(0.001, 99, 100) == 0.001
        assert halved_learning_rate(0.001, 100, 100) == 0.0005
        assert halved_learning_rate(0.001, 150, 100) == 0.0005
        assert halved_learning_rate(0.001, 10, None) == 0.001


class TestModelConfig:
    def test_rejects_empty_architecture(self):
        with pytest.raises(UsageError):
            ModelConfig("", 4, 2, 2)

    def test_rejects_pool_without_operator(self):
        with pytest.raises(UsageError):
            ModelConfig("CPCL", 4, 2, 2, operator="none")

    def test_rejects_trailing_graph_layers(self):
        with pytest.raises(UsageError):
            ModelConfig("CLC", 4, 2, 2)

    def test_binary_uses_single_output(self):
        assert ModelConfig("CL", 4, 2, 2, operator="none").num_outputs == 1
        assert ModelConfig("CL", 4, 3, 2, operator="none").num_outputs == 3


def model_loss(model, batch):
    logits, _ = model.forward(batch, train=False)
    if model.config.num_outputs == 1:
        p1 = 1.0 / (1.0 + np.exp(-logits[:, 0]))
        probs = np.column_stack([1.0 - p1, p1])
    else:
        probs = softmax(logits)
    return cross_entropy_loss(probs, batch.labels)


def finite_difference_model_grads(model, batch, h=1e-6):
    grads = []
    for p in model.parameters():
        g = np.zeros_like(p.value)
        flat = p.value.ravel()
        gflat = g.ravel()
        for i in range(flat.shape[0]):
            orig = flat[i]
            flat[i] = orig + h
            up = model_loss(model, batch)
            flat[i] = orig - h
            down = model_loss(model, batch)
            flat[i] = orig
            gflat[i] = (up - down) / (2 * h)
        grads.append(g)
    return grads


def make_labeled_batch(rng, num_graphs, feature_dim, num_classes, max_nodes=6):
    graphs = [
        random_graph(
            rng,
            max_nodes=max_nodes,
            feature_dim=feature_dim,
            min_nodes=2,
            edge_prob=0.6,
            label=int(rng.integers(num_classes)),
        )
        for _ in range(num_graphs)
    ]
    return batch_graphs(graphs)


class TestModelGradients:
    @pytest.mark.parametrize("operator,num_classes", [
        ("component", 2),
        ("component", 3),
        ("edgepool", 2),
    ])
    def test_full_model_matches_finite_differences(self, operator, num_classes):
        rng = np.random.default_rng(7)
        config = ModelConfig(
            architecture="CPCL",
            hidden_size=4,
            num_classes=num_classes,
            input_dim=2,
            dropout=0.0,
            operator=operator,
        )
        model = Model(config, rng)
        batch = make_labeled_batch(rng, 3, 2, num_classes)
        model.zero_grad()
        model.loss_and_backward(batch, train=False)
        fd = finite_difference_model_grads(model, batch)
        for p, g in zip(model.parameters(), fd):
            assert relative_error(p.grad, g) <= 1e-4, p.name

    def test_zero_gradients_for_saturated_perfect_prediction(self):
        rng = np.random.default_rng(3)
        config = ModelConfig("CL", hidden_size=4, num_classes=2, input_dim=2, operator="none")
        model = Model(config, rng)
        batch = make_labeled_batch(rng, 2, 2, 2)
        # push the output bias to saturate the sigmoid toward the true labels
        logits, _ = model.forward(batch)
        model.dense_layers[-1].bias.value[...] = 1e3 if batch.labels[0] else -1e3
        batch.labels[...] = batch.labels[0]
        model.zero_grad()
        model.loss_and_backward(batch, train=False)
        assert all(np.abs(p.grad).max() < 1e-8 for p in model.parameters())

    def test_dropout_rate_zero_is_identity(self):
        rng = np.random.default_rng(5)
        config = ModelConfig("CPCL", 4, 2, 2, dropout=0.0, operator="component")
        model = Model(config, rng)
        batch = make_labeled_batch(rng, 3, 2, 2)
        model.zero_grad()
        model.loss_and_backward(batch, rng=np.random.default_rng(0), train=True)
        grads_train = [p.grad.copy() for p in model.parameters()]
        model.zero_grad()
        model.loss_and_backward(batch, train=False)
        for a, p in zip(grads_train, model.parameters()):
            assert np.array_equal(a, p.grad)

    def test_backward_without_labels_raises(self):
        rng = np.random.default_rng(5)
        model = Model(ModelConfig("CL", 4, 2, 2, operator="none"), rng)
        graphs = [random_graph(rng, feature_dim=2, min_nodes=2)]
        with pytest.raises(UsageError):
            model.loss_and_backward(batch_graphs(graphs))


class TestModelForward:
    def test_deterministic_without_dropout(self, rng):
        config = ModelConfig("CPCL", 8, 2, 3, dropout=0.0, operator="component")
        model = Model(config, np.random.default_rng(0))
        batch = make_labeled_batch(rng, 4, 3, 2)
        a, _ = model.forward(batch)
        b, _ = model.forward(batch)
        assert np.array_equal(a, b)

    def test_predict_proba_rows_sum_to_one(self, rng):
        for num_classes in (2, 3):
            config = ModelConfig("CCL", 8, num_classes, 3, operator="none")
            model = Model(config, np.random.default_rng(1))
            batch = make_labeled_batch(rng, 4, 3, num_classes)
            probs = model.predict_proba(batch)
            assert probs.shape == (4, num_classes)
            assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-12)


class TestCountParameters:
    def test_hand_counted_linear_layer(self):
        config = ModelConfig("L", 16, 3, 8, operator="none")
        model = Model(config, np.random.default_rng(0))
        # single output layer 8 -> 3
        assert count_parameters(model) == 8 * 3 + 3

    def test_single_hidden_linear_8_to_16(self):
        config = ModelConfig("LL", 16, 3, 8, operator="none")
        model = Model(config, np.random.default_rng(0))
        assert count_parameters(model) == (8 * 16 + 16) + (16 * 3 + 3)

    def test_proteins_architecture_count(self):
        # CPCL, hidden 16, input 8, binary head: exact count under the
        # standard convention; the published table reports 802 for this row
        config = ModelConfig("CPCL", 16, 2, 8, operator="component")
        model = Model(config, np.random.default_rng(0))
        expected = (8 * 16 + 16) + (32 + 1) + (16 * 16 + 16) + (16 * 1 + 1)
        assert count_parameters(model) == expected


class TestCheckpoint:
    def test_roundtrip(self, tmp_path, rng):
        config = ModelConfig("CPCL", 8, 3, 4, dropout=0.1, operator="component")
        model = Model(config, np.random.default_rng(42))
        path = tmp_path / "model.ckpt"
        save_model(model, path)
        restored = load_model(path)
        assert restored.config == config
        for a, b in zip(model.parameters(), restored.parameters()):
            assert a.name == b.name
            assert np.array_equal(a.value, b.value)
        batch = make_labeled_batch(rng, 3, 4, 3)
        assert np.array_equal(model.predict_proba(batch), restored.predict_proba(batch))

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.ckpt"
        path.write_bytes(b"NOPE" + b"\x00" * 64)
        with pytest.raises(ContainerError):
            load_model(path)
