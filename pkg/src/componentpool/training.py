"""Training loop, evaluation and repeated-experiment orchestration."""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .data import Dataset, split_dataset, standardize_features
from .graph import Graph
from .nn import GraphBatch, Model, ModelConfig, UsageError, batch_graphs, count_parameters
from .optim import Adam, halved_learning_rate

DEFAULT_BATCH_SIZE = 32


class TrainingError(RuntimeError):
    """Raised when training diverges (NaN loss)."""


@dataclass
class TrainConfig:
    model: ModelConfig
    epochs: int
    learning_rate: float
    lr_halving_every: int | None = None
    seed: int = 0
    batch_size: int = DEFAULT_BATCH_SIZE

    def __post_init__(self):
        if self.epochs < 1:
            raise UsageError(f"epochs must be >= 1, got {self.epochs}")
        if self.learning_rate <= 0:
            raise UsageError(f"learning rate must be positive, got {self.learning_rate}")
        if not 0.0 <= self.model.dropout < 1.0:
            raise UsageError(f"dropout must be in [0, 1), got {self.model.dropout}")


@dataclass
class ResultRecord:
    repetition: int
    seed: int
    test_accuracy: float
    best_validation_accuracy: float
    parameter_count: int
    wall_time: float

    def to_json(self) -> str:
        # wall_time is nondeterministic and would break the byte-identical
        # records contract; it stays in memory and in the summary only
        fields = asdict(self)
        fields.pop("wall_time")
        return json.dumps(fields, sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "ResultRecord":
        return cls(wall_time=0.0, **json.loads(line))


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    validation_accuracy: list[float] = field(default_factory=list)
    best_epoch: int = -1


def evaluate(model: Model, graphs: list[Graph]) -> float:
    """Fraction of graphs whose argmax prediction matches the label."""
    if not graphs:
        raise UsageError("cannot evaluate on an empty split")
    batch = batch_graphs(graphs)
    if batch.labels is None:
        raise UsageError("evaluation split has unlabeled graphs")
    preds = model.predict(batch)
    return float((preds == batch.labels).mean())


def train_model(
    config: TrainConfig,
    train_graphs: list[Graph],
    val_graphs: list[Graph],
) -> tuple[Model, TrainHistory]:
    """Train for the configured epochs; returns the best-validation model.

    The checkpoint with the highest validation accuracy seen so far is kept
    (earliest epoch wins ties) and restored into the returned model.
    """
    rng = np.random.default_rng(config.seed)
    model = Model(config.model, rng)
    optimizer = Adam(model.parameters(), config.learning_rate)
    history = TrainHistory()
    best_acc = -1.0
    best_state: list[np.ndarray] = []

    n = len(train_graphs)
    for epoch in range(config.epochs):
        optimizer.learning_rate = halved_learning_rate(
            config.learning_rate, epoch, config.lr_halving_every
        )
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            batch = batch_graphs([train_graphs[i] for i in order[start : start + config.batch_size]])
            optimizer.zero_grad()
            loss = model.loss_and_backward(batch, rng=rng, train=True)
            if not np.isfinite(loss):
                raise TrainingError(f"loss diverged to {loss} at epoch {epoch}")
            optimizer.step()
            epoch_loss += loss * batch.num_graphs
        history.train_loss.append(epoch_loss / n)
        val_acc = evaluate(model, val_graphs)
        history.validation_accuracy.append(val_acc)
        if val_acc > best_acc:
            best_acc = val_acc
            best_state = [p.value.copy() for p in model.parameters()]
            history.best_epoch = epoch

    for p, saved in zip(model.parameters(), best_state):
        p.value[...] = saved
    return model, history


def summarize(records: list[ResultRecord]) -> dict:
    """Mean and sample standard deviation of the test accuracies."""
    accs = np.array([r.test_accuracy for r in records])
    std = float(accs.std(ddof=1)) if len(accs) > 1 else 0.0
    return {
        "repetitions": len(records),
        "mean_test_accuracy": float(accs.mean()),
        "std_test_accuracy": std,
        "parameter_count": records[0].parameter_count if records else 0,
        "total_wall_time": float(sum(r.wall_time for r in records)),
    }


def run_experiment(
    config: TrainConfig,
    dataset: Dataset,
    repetitions: int,
    seed_base: int = 0,
    out_path: str | Path | None = None,
    standardize: bool | None = None,
) -> tuple[list[ResultRecord], dict]:
    """Repeat split/train/test with seeds seed_base..seed_base+R-1.

    Reusing the split seed across operators guarantees every method sees
    identical data. Records are appended to ``out_path`` as they complete so
    partial results survive an interrupt.
    """
    if repetitions < 1:
        raise UsageError(f"repetitions must be >= 1, got {repetitions}")
    if standardize is None:
        standardize = dataset.feature_mode == "native"
    out_fh = open(out_path, "w") if out_path else None
    records = []
    try:
        for rep in range(repetitions):
            seed = seed_base + rep
            train, val, test = split_dataset(dataset, seed)
            if standardize:
                train, val, test = standardize_features(train, val, test)
            rep_config = TrainConfig(
                model=config.model,
                epochs=config.epochs,
                learning_rate=config.learning_rate,
                lr_halving_every=config.lr_halving_every,
                seed=seed,
                batch_size=config.batch_size,
            )
            started = time.perf_counter()
            model, history = train_model(rep_config, train, val)
            record = ResultRecord(
                repetition=rep,
                seed=seed,
                test_accuracy=evaluate(model, test),
                best_validation_accuracy=max(history.validation_accuracy),
                parameter_count=count_parameters(model),
                wall_time=time.perf_counter() - started,
            )
            records.append(record)
            if out_fh:
                out_fh.write(record.to_json() + "\n")
                out_fh.flush()
    finally:
        if out_fh:
            out_fh.close()
    return records, summarize(records)
