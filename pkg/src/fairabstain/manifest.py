"""Dataset manifest, discretization and CSV ingestion.

A manifest declares which columns are sensitive, which are
legally-grounded, which column is the binary target (and which raw
value counts as the desirable outcome), the reference demographic
group, and bin edges for every numeric column used in rule mining.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional

from .errors import DataError, ManifestError


def _bin_label(lo: float, hi: float) -> str:
    """Human-readable item label for the half-open bin [lo, hi).

    Integer edges render as a closed integer range, e.g. edges 30/40
    become "[30,39]"; fractional edges keep the half-open notation.
    """
    if float(lo).is_integer() and float(hi).is_integer():
        return f"[{int(lo)},{int(hi) - 1}]"
    return f"[{lo:g},{hi:g})"


@dataclass(frozen=True)
class DatasetManifest:
    sensitive_features: tuple[str, ...]
    legal_features: tuple[str, ...]
    target: str
    positive_label: str
    reference_group: Mapping[str, str]
    bins: Mapping[str, tuple[float, ...]] = field(default_factory=dict)

    def __post_init__(self):
        sens = set(self.sensitive_features)
        legal = set(self.legal_features)
        if sens & legal:
            raise ManifestError(
                f"sensitive and legal features overlap: {sorted(sens & legal)}"
            )
        if self.target in sens | legal:
            raise ManifestError(f"target column {self.target!r} also declared as a feature")
        missing_ref = sens - set(self.reference_group)
        if missing_ref:
            raise ManifestError(
                f"reference_group missing sensitive features: {sorted(missing_ref)}"
            )
        extra_ref = set(self.reference_group) - sens
        if extra_ref:
            raise ManifestError(
                f"reference_group names non-sensitive columns: {sorted(extra_ref)}"
            )
        for col, edges in self.bins.items():
            if len(edges) < 2:
                raise ManifestError(f"bin edges for {col!r} need at least two values")
            if list(edges) != sorted(edges):
                raise ManifestError(f"bin edges for {col!r} must be ascending")

    @property
    def feature_columns(self) -> tuple[str, ...]:
        return self.sensitive_features + self.legal_features

    @property
    def numeric_legal_features(self) -> tuple[str, ...]:
        return tuple(c for c in self.legal_features if c in self.bins)

    def bin_value(self, column: str, value: float) -> str:
        """Map a numeric value to its bin item label."""
        edges = self.bins[column]
        for lo, hi in zip(edges, edges[1:]):
            if lo <= value < hi:
                return _bin_label(lo, hi)
        # the top edge itself belongs to the last bin
        if value == edges[-1]:
            return _bin_label(edges[-2], edges[-1])
        raise DataError(f"value {value!r} for column {column!r} falls outside all bins")

    def is_reference(self, values: Mapping[str, str]) -> bool:
        return all(values[f] == v for f, v in self.reference_group.items())

    def to_dict(self) -> dict:
        return {
            "sensitive_features": list(self.sensitive_features),
            "legal_features": list(self.legal_features),
            "target": self.target,
            "positive_label": self.positive_label,
            "reference_group": dict(self.reference_group),
            "bins": {c: list(e) for c, e in self.bins.items()},
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "DatasetManifest":
        try:
            return cls(
                sensitive_features=tuple(d["sensitive_features"]),
                legal_features=tuple(d["legal_features"]),
                target=d["target"],
                positive_label=str(d["positive_label"]),
                reference_group=dict(d["reference_group"]),
                bins={c: tuple(float(x) for x in e) for c, e in d.get("bins", {}).items()},
            )
        except KeyError as exc:
            raise ManifestError(f"manifest missing key {exc}") from exc

    @classmethod
    def load(cls, path: str | Path) -> "DatasetManifest":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)


@dataclass(frozen=True)
class Instance:
    """One row after discretization.

    `values` holds the post-binning categorical value of every manifest
    feature column; `raw_values` keeps the originals for distance
    computation. `label` is 1 for the desirable outcome when known.
    """

    id: str
    values: Mapping[str, str]
    raw_values: Mapping[str, object]
    label: Optional[int] = None

    def transaction(self) -> frozenset:
        return frozenset(self.values.items())


def _convert_row(manifest: DatasetManifest, row: Mapping[str, str],
                 row_no: int, instance_id: str,
                 negative_label: Optional[str]) -> Instance:
    values = {}
    raw = {}
    for col in manifest.feature_columns:
        raw_v = row[col]
        if col in manifest.bins:
            try:
                num = float(raw_v)
            except ValueError as exc:
                raise DataError(
                    f"row {row_no}: column {col!r} value {raw_v!r} is not numeric"
                ) from exc
            try:
                values[col] = manifest.bin_value(col, num)
            except DataError as exc:
                raise DataError(f"row {row_no}: {exc}") from exc
            raw[col] = num
        else:
            values[col] = raw_v
            raw[col] = raw_v
    target_v = row[manifest.target]
    if target_v == manifest.positive_label:
        label = 1
    elif negative_label is None or target_v == negative_label:
        label = 0
    else:
        raise DataError(
            f"row {row_no}: target value {target_v!r} is neither "
            f"{manifest.positive_label!r} nor {negative_label!r}"
        )
    return Instance(id=instance_id, values=values, raw_values=raw, label=label)


def load_dataset(path: str | Path, manifest: DatasetManifest) -> list[Instance]:
    """Read a CSV file under a manifest into binned instances.

    The target must take exactly two distinct raw values; the one equal
    to `positive_label` maps to 1, the other to 0.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataError(f"{path}: empty file, expected a header row")
        needed = set(manifest.feature_columns) | {manifest.target}
        missing = needed - set(reader.fieldnames)
        if missing:
            raise ManifestError(f"{path}: missing columns {sorted(missing)}")
        rows = list(reader)

    target_values = sorted({r[manifest.target] for r in rows})
    if manifest.positive_label not in target_values and rows:
        raise DataError(
            f"positive label {manifest.positive_label!r} absent from target "
            f"values {target_values}"
        )
    negatives = [v for v in target_values if v != manifest.positive_label]
    if len(negatives) > 1:
        raise DataError(f"target takes more than two values: {target_values}")
    negative_label = negatives[0] if negatives else None

    instances = []
    for i, row in enumerate(rows):
        instances.append(_convert_row(manifest, row, i + 2, str(i), negative_label))
    return instances


def instances_to_dicts(instances: Iterable[Instance]) -> list[dict]:
    return [
        {"id": x.id, "values": dict(x.values), "raw_values": dict(x.raw_values),
         "label": x.label}
        for x in instances
    ]


def instances_from_dicts(dicts: Iterable[Mapping]) -> list[Instance]:
    return [
        Instance(id=d["id"], values=dict(d["values"]),
                 raw_values=dict(d["raw_values"]), label=d.get("label"))
        for d in dicts
    ]
