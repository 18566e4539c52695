"""Situation testing: the local fairness check.

Compares the positive-label rate among an instance's k nearest
labeled training neighbors from the reference group against the rate
among its k nearest non-reference neighbors. Distances use legal
features only, so swapping sensitive values never moves an instance.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .classifier import ScoredInstance
from .errors import SituationTestError
from .manifest import DatasetManifest, Instance

# normalized numeric gaps are capped at this many standard deviations
_NUMERIC_CAP = 3.0


@dataclass(frozen=True)
class STConfig:
    k: int = 10
    t: float = 0.3
    distance_stats: Mapping[str, tuple[float, float]] = field(default_factory=dict)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not 0.0 <= self.t <= 1.0:
            raise ValueError("t must be in [0,1]")

    def to_dict(self) -> dict:
        return {"k": self.k, "t": self.t,
                "distance_stats": {c: list(s) for c, s in self.distance_stats.items()}}

    @classmethod
    def from_dict(cls, d: Mapping) -> "STConfig":
        return cls(k=int(d["k"]), t=float(d["t"]),
                   distance_stats={c: (s[0], s[1])
                                   for c, s in d.get("distance_stats", {}).items()})


def compute_distance_stats(train: Sequence[Instance],
                           manifest: DatasetManifest) -> dict[str, tuple[float, float]]:
    """Mean and standard deviation of each numeric legal feature on train."""
    stats = {}
    for col in manifest.numeric_legal_features:
        vals = np.array([float(x.raw_values[col]) for x in train])
        stats[col] = (float(vals.mean()), float(vals.std()))
    return stats


@dataclass(frozen=True)
class Neighbor:
    instance: Instance
    distance: float


@dataclass(frozen=True)
class STResult:
    neighbors_ref: tuple[Neighbor, ...]
    neighbors_nonref: tuple[Neighbor, ...]
    dec_r: float
    dec_nr: float
    score: float
    flagged: bool

    def to_dict(self) -> dict:
        def dump(neighbors):
            return [{"id": n.instance.id,
                     "features": dict(n.instance.raw_values),
                     "label": n.instance.label,
                     "distance": n.distance} for n in neighbors]
        return {"neighbors_ref": dump(self.neighbors_ref),
                "neighbors_nonref": dump(self.neighbors_nonref),
                "dec_r": self.dec_r, "dec_nr": self.dec_nr,
                "score": self.score, "flagged": self.flagged}


def distance(a: Instance, b: Instance, manifest: DatasetManifest,
             config: STConfig) -> float:
    """Mean per-feature distance over legal features, in [0,1]."""
    total = 0.0
    for col in manifest.legal_features:
        if col in manifest.bins:
            _, sigma = config.distance_stats.get(col, (0.0, 0.0))
            va, vb = float(a.raw_values[col]), float(b.raw_values[col])
            if sigma == 0.0:
                total += 0.0 if va == vb else 1.0
            else:
                total += min(abs(va - vb) / sigma, _NUMERIC_CAP) / _NUMERIC_CAP
        else:
            total += 0.0 if a.values[col] == b.values[col] else 1.0
    return total / len(manifest.legal_features)


class SituationTester:
    """Precomputed exact kNN over the labeled training set, per group."""

    def __init__(self, train: Sequence[Instance], manifest: DatasetManifest,
                 config: STConfig):
        self.manifest = manifest
        self.config = config
        labeled = [x for x in train if x.label is not None]
        self._groups = {}
        for name, members in (
                ("ref", [x for x in labeled if manifest.is_reference(x.values)]),
                ("nonref", [x for x in labeled if not manifest.is_reference(x.values)])):
            self._groups[name] = self._prepare(members)

    def _prepare(self, members: list[Instance]) -> dict:
        cat_cols = [c for c in self.manifest.legal_features
                    if c not in self.manifest.bins]
        num_cols = [c for c in self.manifest.legal_features
                    if c in self.manifest.bins]
        cat = np.array([[x.values[c] for c in cat_cols] for x in members],
                       dtype=object).reshape(len(members), len(cat_cols))
        num = np.array([[float(x.raw_values[c]) for c in num_cols] for x in members],
                       dtype=float).reshape(len(members), len(num_cols))
        sigmas = np.array([self.config.distance_stats.get(c, (0.0, 0.0))[1]
                           for c in num_cols])
        labels = np.array([x.label for x in members], dtype=float)
        id_rank = np.argsort(np.argsort(np.array([x.id for x in members])))
        return {"members": members, "cat_cols": cat_cols, "num_cols": num_cols,
                "cat": cat, "num": num, "sigmas": sigmas, "labels": labels,
                "id_rank": id_rank}

    def _distances(self, group: dict, target: Instance) -> np.ndarray:
        n = len(group["members"])
        d = np.zeros(n)
        if group["cat_cols"]:
            tc = np.array([target.values[c] for c in group["cat_cols"]], dtype=object)
            d += (group["cat"] != tc).sum(axis=1)
        if group["num_cols"]:
            tv = np.array([float(target.raw_values[c]) for c in group["num_cols"]])
            gaps = np.abs(group["num"] - tv)
            sig = group["sigmas"]
            with np.errstate(divide="ignore", invalid="ignore"):
                norm = np.where(sig > 0,
                                np.minimum(gaps / np.where(sig > 0, sig, 1.0),
                                           _NUMERIC_CAP) / _NUMERIC_CAP,
                                (gaps != 0).astype(float))
            d += norm.sum(axis=1)
        return d / len(self.manifest.legal_features)

    def _nearest(self, group: dict, target: Instance, k: int) -> list[Neighbor]:
        dists = self._distances(group, target)
        order = np.lexsort((group["id_rank"], dists))[:k]
        return [Neighbor(group["members"][i], float(dists[i])) for i in order]

    def test(self, target: Instance) -> STResult:
        k = self.config.k
        for name in ("ref", "nonref"):
            if len(self._groups[name]["members"]) < k:
                raise SituationTestError(
                    f"need {k} labeled {name}-group training instances, "
                    f"have {len(self._groups[name]['members'])}")
        near_ref = self._nearest(self._groups["ref"], target, k)
        near_nonref = self._nearest(self._groups["nonref"], target, k)
        dec_r = sum(n.instance.label for n in near_ref) / k
        dec_nr = sum(n.instance.label for n in near_nonref) / k
        score = dec_r - dec_nr
        return STResult(neighbors_ref=tuple(near_ref),
                        neighbors_nonref=tuple(near_nonref),
                        dec_r=dec_r, dec_nr=dec_nr, score=score,
                        flagged=score >= self.config.t)


def situation_test(target: ScoredInstance, train: Sequence[Instance],
                   manifest: DatasetManifest, config: STConfig) -> STResult:
    """One-shot situation test; build a SituationTester for batches."""
    return SituationTester(train, manifest, config).test(target.instance)
