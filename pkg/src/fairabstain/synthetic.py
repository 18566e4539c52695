"""Planted-bias synthetic data generator.

Labels follow a logistic model over the legal features; a bias
coefficient depresses the positive-label probability for penalized
sensitive groups at equal legal features. With bias 0 the label is
independent of the sensitive features.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .manifest import DatasetManifest


@dataclass(frozen=True)
class NumericFeature:
    mean: float
    std: float
    lo: float
    hi: float
    weight: float
    edges: tuple[float, ...]


@dataclass(frozen=True)
class CategoricalFeature:
    # value -> (sampling probability, additive effect on the label score)
    levels: Mapping[str, tuple[float, float]]


@dataclass(frozen=True)
class SyntheticSpec:
    n: int
    sensitive: Mapping[str, Mapping[str, float]]
    numeric: Mapping[str, NumericFeature]
    categorical: Mapping[str, CategoricalFeature]
    penalized: Mapping[str, tuple[str, ...]]
    bias: float = 0.0
    noise: float = 0.5
    intercept: float = 0.0
    reference_group: Mapping[str, str] = field(default_factory=dict)
    target: str = "income"
    positive_label: str = "high"
    negative_label: str = "low"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("synthetic dataset must have at least one row")
        for feat, probs in self.sensitive.items():
            if abs(sum(probs.values()) - 1.0) > 1e-9:
                raise ValueError(f"proportions for {feat!r} must sum to 1")
        for feat, cf in self.categorical.items():
            if abs(sum(p for p, _ in cf.levels.values()) - 1.0) > 1e-9:
                raise ValueError(f"proportions for {feat!r} must sum to 1")

    def manifest(self) -> DatasetManifest:
        return DatasetManifest(
            sensitive_features=tuple(self.sensitive),
            legal_features=tuple(self.numeric) + tuple(self.categorical),
            target=self.target,
            positive_label=self.positive_label,
            reference_group=dict(self.reference_group),
            bins={c: f.edges for c, f in self.numeric.items()},
        )


def default_spec(n: int = 20_000, bias: float = 1.5, noise: float = 0.5) -> SyntheticSpec:
    """Income-style task: sex and race sensitive, three legal features."""
    return SyntheticSpec(
        n=n,
        sensitive={
            "sex": {"M": 0.5, "F": 0.5},
            "race": {"W": 0.65, "B": 0.35},
        },
        numeric={
            "education": NumericFeature(mean=14, std=2.5, lo=8, hi=20,
                                        weight=1.0, edges=(8, 12, 16, 21)),
            "hours": NumericFeature(mean=40, std=8, lo=20, hi=60,
                                    weight=0.8, edges=(20, 30, 40, 50, 61)),
        },
        categorical={
            "occupation": CategoricalFeature(levels={
                "service": (0.4, -0.5),
                "admin": (0.35, 0.0),
                "tech": (0.25, 0.6),
            }),
        },
        penalized={"sex": ("F",), "race": ("B",)},
        bias=bias,
        noise=noise,
        intercept=0.3,
        reference_group={"sex": "M", "race": "W"},
    )


def generate_synthetic(spec: SyntheticSpec, seed: int = 0) -> list[dict]:
    """Sample raw CSV rows deterministically under the seed."""
    rng = np.random.default_rng(seed)
    n = spec.n
    rows = [{} for _ in range(n)]
    score = np.full(n, spec.intercept, dtype=float)

    for feat, probs in spec.sensitive.items():
        values = list(probs)
        draws = rng.choice(len(values), size=n, p=[probs[v] for v in values])
        penalized = set(spec.penalized.get(feat, ()))
        for i, d in enumerate(draws):
            rows[i][feat] = values[d]
            if values[d] in penalized:
                score[i] -= spec.bias

    for feat, nf in spec.numeric.items():
        draws = np.clip(np.round(rng.normal(nf.mean, nf.std, size=n)),
                        nf.lo, nf.hi)
        score += nf.weight * (draws - nf.mean) / nf.std
        for i, d in enumerate(draws):
            rows[i][feat] = f"{d:g}"

    for feat, cf in spec.categorical.items():
        values = list(cf.levels)
        draws = rng.choice(len(values), size=n,
                           p=[cf.levels[v][0] for v in values])
        for i, d in enumerate(draws):
            rows[i][feat] = values[d]
            score[i] += cf.levels[values[d]][1]

    score += spec.noise * rng.standard_normal(n)
    p_pos = 1.0 / (1.0 + np.exp(-score))
    labels = rng.random(n) < p_pos
    for i, y in enumerate(labels):
        rows[i][spec.target] = spec.positive_label if y else spec.negative_label
    return rows


def write_synthetic(spec: SyntheticSpec, seed: int,
                    csv_path: str | Path, manifest_path: str | Path) -> None:
    rows = generate_synthetic(spec, seed)
    columns = (list(spec.sensitive) + list(spec.numeric)
               + list(spec.categorical) + [spec.target])
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        writer.writerows(rows)
    spec.manifest().save(manifest_path)
