import numpy as np
import pytest

from componentpool.data import Dataset
from componentpool.nn import Model, ModelConfig, UsageError, batch_graphs
from componentpool.training import (
    ResultRecord,
    TrainConfig,
    evaluate,
    run_experiment,
    summarize,
    train_model,
)

from conftest import random_graph


def toy_config(input_dim=2, epochs=200, operator="component", seed=0):
    return TrainConfig(
        model=ModelConfig(
            architecture="CPCL",
            hidden_size=16,
            num_classes=2,
            input_dim=input_dim,
            dropout=0.0,
            operator=operator,
        ),
        epochs=epochs,
        learning_rate=0.01,
        seed=seed,
    )


def separable_toy_graphs(rng, n=5, d=2):
    """Graphs whose label is encoded directly in the feature scale."""
    graphs = []
    for i in range(n):
        label = i % 2
        g = random_graph(rng, max_nodes=6, feature_dim=d, min_nodes=3, label=label)
        shifted = g.features + (2.0 if label else -2.0)
        graphs.append(
            type(g)(g.num_nodes, g.edges, shifted, label=label)
        )
    return graphs


class TestTrainModel:
    def test_overfits_toy_set(self, rng):
        graphs = separable_toy_graphs(rng, n=5)
        model, history = train_model(toy_config(), graphs, graphs)
        assert evaluate(model, graphs) == 1.0

    def test_zero_epochs_rejected(self):
        with pytest.raises(UsageError):
            toy_config(epochs=0)

    def test_negative_lr_rejected(self):
        cfg = toy_config()
        with pytest.raises(UsageError):
            TrainConfig(model=cfg.model, epochs=1, learning_rate=0.0)

    def test_same_seed_bitwise_identical(self, rng):
        graphs = separable_toy_graphs(rng, n=6)
        cfg = toy_config(epochs=10, seed=3)
        m1, _ = train_model(cfg, graphs[:4], graphs[4:])
        m2, _ = train_model(cfg, graphs[:4], graphs[4:])
        for a, b in zip(m1.parameters(), m2.parameters()):
            assert np.array_equal(a.value, b.value)

    def test_best_validation_checkpoint_returned(self, rng):
        graphs = separable_toy_graphs(rng, n=8)
        cfg = toy_config(epochs=30)
        model, history = train_model(cfg, graphs[:6], graphs[6:])
        best = max(history.validation_accuracy)
        assert evaluate(model, graphs[6:]) == best


class TestEvaluate:
    def test_oracle_model_scores_one(self, rng):
        graphs = separable_toy_graphs(rng, n=6)
        model, _ = train_model(toy_config(), graphs, graphs)
        assert evaluate(model, graphs) == 1.0

    def test_constant_model_on_balanced_split(self, rng):
        graphs = separable_toy_graphs(rng, n=6)
        model = Model(toy_config().model, np.random.default_rng(0))
        # saturate the head so every graph gets class 1
        model.dense_layers[-1].bias.value[...] = 1e3
        assert evaluate(model, graphs) == 0.5

    def test_empty_split_rejected(self, rng):
        model = Model(toy_config().model, np.random.default_rng(0))
        with pytest.raises(UsageError):
            evaluate(model, [])


class TestRunExperiment:
    def _dataset(self, rng, n=14):
        return Dataset("toy", separable_toy_graphs(rng, n=n), 2)

    def test_single_repetition_summary(self, rng):
        ds = self._dataset(rng)
        records, summary = run_experiment(toy_config(epochs=5), ds, repetitions=1)
        assert len(records) == 1
        assert summary["mean_test_accuracy"] == records[0].test_accuracy
        assert summary["std_test_accuracy"] == 0.0

    def test_repetitions_deterministic(self, rng, tmp_path):
        ds = self._dataset(rng)
        cfg = toy_config(epochs=4)
        out1, out2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        run_experiment(cfg, ds, repetitions=3, out_path=out1)
        run_experiment(cfg, ds, repetitions=3, out_path=out2)
        assert out1.read_bytes() == out2.read_bytes()

    def test_summary_matches_persisted_records(self, rng, tmp_path):
        ds = self._dataset(rng)
        out = tmp_path / "records.jsonl"
        records, summary = run_experiment(toy_config(epochs=4), ds, repetitions=3, out_path=out)
        reloaded = [
            ResultRecord.from_json(line)
            for line in out.read_text().splitlines()
            if line.strip()
        ]
        for a, b in zip(reloaded, records):
            assert (a.repetition, a.seed, a.test_accuracy, a.parameter_count) == (
                b.repetition,
                b.seed,
                b.test_accuracy,
                b.parameter_count,
            )
        re_summary = summarize(reloaded)
        assert abs(re_summary["mean_test_accuracy"] - summary["mean_test_accuracy"]) < 1e-12
        assert abs(re_summary["std_test_accuracy"] - summary["std_test_accuracy"]) < 1e-12

    def test_invalid_repetitions(self, rng):
        with pytest.raises(UsageError):
            run_experiment(toy_config(), self._dataset(rng), repetitions=0)

    def test_identical_splits_across_operators(self, rng):
        # the per-repetition seed drives the split, so both operators see
        # identical data partitions
        ds = self._dataset(rng)
        from componentpool.data import split_dataset

        a = split_dataset(ds, seed=1)
        b = split_dataset(ds, seed=1)
        assert [id(g) for g in a[2]] == [id(g) for g in b[2]]
