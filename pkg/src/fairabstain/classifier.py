"""Probabilistic base classifiers: a built-in logistic model over
one-hot encoded items, and an external id -> probability table.

Both emit the same ScoredInstance contract, so everything downstream
is agnostic to where the probabilities came from.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import FitError, ScoringError
from .manifest import Instance


@dataclass(frozen=True)
class ScoredInstance:
    instance: Instance
    p_pos: float

    @property
    def prediction(self) -> int:
        # tie at 0.5 predicts class 1, consistently across all methods
        return 1 if self.p_pos >= 0.5 else 0

    @property
    def confidence(self) -> float:
        return max(self.p_pos, 1.0 - self.p_pos)


class ProbClassifier:
    """Common scoring interface; see fit_builtin / load_external."""

    def predict_proba(self, instances: Sequence[Instance]) -> np.ndarray:
        raise NotImplementedError

    def score(self, instances: Sequence[Instance]) -> list[ScoredInstance]:
        probs = self.predict_proba(instances)
        return [ScoredInstance(x, float(p)) for x, p in zip(instances, probs)]


class LogisticItemModel(ProbClassifier):
    """Logistic regression over one-hot items, full-batch gradient descent."""

    kind = "builtin-logistic"

    def __init__(self, feature_index: Mapping[tuple, int], weights: np.ndarray,
                 bias: float):
        self.feature_index = dict(feature_index)
        self.weights = weights
        self.bias = bias

    def _encode(self, instances: Sequence[Instance]) -> np.ndarray:
        X = np.zeros((len(instances), len(self.feature_index)))
        for i, x in enumerate(instances):
            for item in x.values.items():
                j = self.feature_index.get(item)
                if j is not None:
                    X[i, j] = 1.0
        return X

    def predict_proba(self, instances: Sequence[Instance]) -> np.ndarray:
        z = self._encode(instances) @ self.weights + self.bias
        return 1.0 / (1.0 + np.exp(-z))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "items": [[c, v] for (c, v), _ in
                      sorted(self.feature_index.items(), key=lambda kv: kv[1])],
            "weights": self.weights.tolist(),
            "bias": self.bias,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "LogisticItemModel":
        index = {(c, v): j for j, (c, v) in enumerate(d["items"])}
        return cls(index, np.array(d["weights"], dtype=float), float(d["bias"]))

    def save(self, path: str | Path) -> None:
        import json
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path: str | Path) -> "LogisticItemModel":
        import json
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def fit_builtin(train: Sequence[Instance], lr: float = 0.5,
                max_epochs: int = 500, tol: float = 1e-6) -> LogisticItemModel:
    """Fit the built-in logistic model.

    Runs full-batch gradient descent until the mean log-loss improves by
    less than `tol` or `max_epochs` is reached.
    """
    if not train:
        raise FitError("training set is empty")
    labels = [x.label for x in train]
    if any(l is None for l in labels):
        raise FitError("training instances must carry labels")
    y = np.array(labels, dtype=float)
    if len(set(labels)) < 2:
        raise FitError("training data contains a single class")

    items = sorted({item for x in train for item in x.values.items()})
    index = {item: j for j, item in enumerate(items)}
    model = LogisticItemModel(index, np.zeros(len(items)), 0.0)
    X = model._encode(train)
    n = len(train)

    prev_loss = np.inf
    for _ in range(max_epochs):
        z = X @ model.weights + model.bias
        p = 1.0 / (1.0 + np.exp(-z))
        eps = 1e-12
        loss = -np.mean(y * np.log(p + eps) + (1 - y) * np.log(1 - p + eps))
        if prev_loss - loss < tol:
            break
        prev_loss = loss
        grad_w = X.T @ (p - y) / n
        grad_b = float(np.mean(p - y))
        model.weights = model.weights - lr * grad_w
        model.bias = model.bias - lr * grad_b
    return model


class ExternalTableModel(ProbClassifier):
    """Probabilities looked up from an external id -> p_pos table."""

    kind = "external-table"

    def __init__(self, table: Mapping[str, float]):
        bad = {k: v for k, v in table.items() if not 0.0 <= v <= 1.0}
        if bad:
            raise ScoringError(f"probabilities outside [0,1] for ids {sorted(bad)[:5]}")
        self.table = dict(table)

    def predict_proba(self, instances: Sequence[Instance]) -> np.ndarray:
        probs = np.empty(len(instances))
        for i, x in enumerate(instances):
            if x.id not in self.table:
                raise ScoringError(f"no external probability for instance id {x.id!r}")
            probs[i] = self.table[x.id]
        return probs


def load_external(path: str | Path) -> ExternalTableModel:
    """Load an `id,p_pos` CSV into an external-table model."""
    table = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"id", "p_pos"} <= set(reader.fieldnames):
            raise ScoringError(f"{path}: expected columns id,p_pos")
        for row in reader:
            table[row["id"]] = float(row["p_pos"])
    return ExternalTableModel(table)


def training_accuracy(model: ProbClassifier, data: Sequence[Instance]) -> float:
    scored = model.score(data)
    return float(np.mean([s.prediction == s.instance.label for s in scored]))
