"""Deterministic dataset splitting and test resampling."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .manifest import Instance

DEFAULT_FRACTIONS = (0.40, 0.15, 0.15, 0.30)


@dataclass(frozen=True)
class SplitBundle:
    train: list[Instance]
    val1: list[Instance]
    val2: list[Instance]
    test: list[Instance]
    seed: int

    @property
    def parts(self) -> tuple[list[Instance], ...]:
        return (self.train, self.val1, self.val2, self.test)


def largest_remainder_sizes(n: int, fractions: Sequence[float]) -> list[int]:
    """Integer part sizes summing to n, each within one of its target.

    Floors first, then hands leftover units to the largest fractional
    remainders; remainder ties go to the earlier part.
    """
    targets = [f * n for f in fractions]
    sizes = [math.floor(t + 1e-9) for t in targets]
    leftover = n - sum(sizes)
    order = sorted(range(len(fractions)),
                   key=lambda i: (-(targets[i] - sizes[i]), i))
    for i in order[:leftover]:
        sizes[i] += 1
    return sizes


def split_dataset(data: Sequence[Instance],
                  fractions: Sequence[float] = DEFAULT_FRACTIONS,
                  seed: int = 0) -> SplitBundle:
    """Shuffle deterministically and cut into train/val1/val2/test."""
    if not data:
        raise ValueError("cannot split an empty dataset")
    if len(fractions) != 4:
        raise ValueError("expected exactly four fractions")
    if any(f < 0 for f in fractions):
        raise ValueError("fractions must be non-negative")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1, got {sum(fractions)}")

    rng = np.random.default_rng(seed)
    order = rng.permutation(len(data))
    shuffled = [data[i] for i in order]
    sizes = largest_remainder_sizes(len(data), fractions)
    parts = []
    at = 0
    for s in sizes:
        parts.append(shuffled[at:at + s])
        at += s
    return SplitBundle(*parts, seed=seed)


def resample_test(test: Sequence[Instance], parts: int, seed: int = 0) -> list[list[Instance]]:
    """Random disjoint partition of the test set into near-equal parts."""
    if parts < 1:
        raise ValueError("parts must be >= 1")
    if parts > len(test):
        raise ValueError(f"cannot split {len(test)} instances into {parts} parts")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(test))
    shuffled = [test[i] for i in order]
    base, rem = divmod(len(test), parts)
    out = []
    at = 0
    for i in range(parts):
        s = base + (1 if i < rem else 0)
        out.append(shuffled[at:at + s])
        at += s
    return out
