"""Association-rule mining over classifier predictions.

Rules take the form (legal items, sensitive items) -> predicted class.
Mining runs separately per sensitive itemset so small demographic
groups are not drowned out by large ones; supports are always computed
against the full scored set. Candidate rules are then scored with
slift (confidence drop when the sensitive part is negated) and a
pooled two-proportion z-test, and filtered to the high-slift,
significant ones.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from scipy.stats import norm

from .classifier import ScoredInstance
from .errors import UndefinedSliftError
from .manifest import DatasetManifest, Instance

Item = tuple[str, str]


@dataclass(frozen=True)
class Itemset:
    sensitive: frozenset
    legal: frozenset

    @property
    def items(self) -> frozenset:
        return self.sensitive | self.legal

    def verified_by(self, transaction: frozenset) -> bool:
        return self.items <= transaction

    def verified_negated_by(self, transaction: frozenset) -> bool:
        """Transaction verifies the legal part but fails the sensitive part."""
        return self.legal <= transaction and not self.sensitive <= transaction

    def describe(self) -> str:
        parts = [f"{c}={v}" for c, v in sorted(self.sensitive) + sorted(self.legal)]
        return " & ".join(parts)


@dataclass(frozen=True)
class DecisionRule:
    antecedent: Itemset
    consequent: int
    support: float
    confidence: float
    slift: float
    p_value: float
    n_group: int = 0
    n_negated: int = 0

    @property
    def kind(self) -> str:
        return "favoring" if self.consequent == 1 else "discriminatory"

    @property
    def negated_confidence(self) -> float:
        return self.confidence - self.slift


@dataclass(frozen=True)
class MiningConfig:
    min_support: float = 0.01
    min_confidence: float = 0.85
    significance_alpha: float = 0.01
    reference_group: Mapping[str, str] = field(default_factory=dict)
    max_legal_items: int = 3

    def __post_init__(self):
        for name in ("min_support", "min_confidence", "significance_alpha"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{name} must be in (0,1], got {v}")


def sensitive_domains(manifest: DatasetManifest,
                      instances: Sequence[Instance]) -> dict[str, list[str]]:
    """Observed values of each sensitive feature, sorted."""
    domains: dict[str, set] = {f: set() for f in manifest.sensitive_features}
    for x in instances:
        for f in manifest.sensitive_features:
            domains[f].add(x.values[f])
    return {f: sorted(v) for f, v in domains.items()}


def enumerate_sensitive_itemsets(manifest: DatasetManifest,
                                 domains: Mapping[str, Sequence[str]]) -> list[Itemset]:
    """Every combination of one value per nonempty subset of sensitive features."""
    features = list(manifest.sensitive_features)
    out = []
    for r in range(1, len(features) + 1):
        for subset in itertools.combinations(features, r):
            for combo in itertools.product(*(domains[f] for f in subset)):
                items = frozenset(zip(subset, combo))
                out.append(Itemset(sensitive=items, legal=frozenset()))
    return out


def frequent_itemsets(transactions: Sequence[frozenset], min_count: int,
                      max_len: Optional[int] = None) -> dict[frozenset, int]:
    """Level-wise apriori over arbitrary transactions.

    Returns every itemset (including the empty one) contained in at
    least `min_count` transactions, mapped to its count.
    """
    min_count = max(min_count, 0)
    result: dict[frozenset, int] = {}
    if len(transactions) >= min_count:
        result[frozenset()] = len(transactions)

    counts: dict[frozenset, int] = {}
    for t in transactions:
        for item in t:
            key = frozenset([item])
            counts[key] = counts.get(key, 0) + 1
    level = {s: c for s, c in counts.items() if c >= min_count}
    result.update(level)

    k = 1
    while level and (max_len is None or k < max_len):
        prev = sorted(level, key=lambda s: sorted(s))
        candidates = set()
        for i in range(len(prev)):
            for j in range(i + 1, len(prev)):
                union = prev[i] | prev[j]
                if len(union) == k + 1 and all(
                        union - frozenset([it]) in level for it in union):
                    candidates.add(union)
        counts = {c: 0 for c in candidates}
        for t in transactions:
            for c in candidates:
                if c <= t:
                    counts[c] += 1
        level = {s: c for s, c in counts.items() if c >= min_count}
        result.update(level)
        k += 1
    return result


def _group_counts(antecedent: Itemset, consequent: int,
                  scored: Sequence[ScoredInstance]) -> tuple[int, int, int, int]:
    """Counts (hits, n) for the subgroup and its sensitive negation."""
    n_g = y_g = n_neg = y_neg = 0
    for s in scored:
        t = s.instance.transaction()
        if antecedent.verified_by(t):
            n_g += 1
            if s.prediction == consequent:
                y_g += 1
        elif antecedent.verified_negated_by(t):
            n_neg += 1
            if s.prediction == consequent:
                y_neg += 1
    return y_g, n_g, y_neg, n_neg


def slift_of(antecedent: Itemset, consequent: int,
             scored: Sequence[ScoredInstance]) -> float:
    """Confidence drop when the sensitive part of the antecedent is negated."""
    y_g, n_g, y_neg, n_neg = _group_counts(antecedent, consequent, scored)
    if n_g == 0:
        raise UndefinedSliftError(f"no transactions verify {antecedent.describe()}")
    if n_neg == 0:
        raise UndefinedSliftError(
            f"no transactions verify the negated sensitive part of {antecedent.describe()}")
    return y_g / n_g - y_neg / n_neg


def two_proportion_z(x1: int, n1: int, x2: int, n2: int) -> tuple[float, float]:
    """Pooled two-proportion z statistic and two-sided p-value."""
    if n1 == 0 or n2 == 0:
        raise ValueError("both groups must be nonempty")
    p1, p2 = x1 / n1, x2 / n2
    pooled = (x1 + x2) / (n1 + n2)
    var = pooled * (1 - pooled) * (1 / n1 + 1 / n2)
    if var == 0.0:
        return 0.0, 1.0
    z = (p1 - p2) / math.sqrt(var)
    return z, float(2.0 * norm.sf(abs(z)))


def significance(rule: DecisionRule, scored: Sequence[ScoredInstance]) -> float:
    y_g, n_g, y_neg, n_neg = _group_counts(rule.antecedent, rule.consequent, scored)
    _, p = two_proportion_z(y_g, n_g, y_neg, n_neg)
    return p


def mine_rules(scored: Sequence[ScoredInstance], manifest: DatasetManifest,
               config: MiningConfig) -> list[DecisionRule]:
    """Mine candidate decision rules from scored instances.

    Discriminatory rules (consequent 0) are mined for every sensitive
    itemset; favoring rules (consequent 1) only for the exact reference
    group. Rules whose negated-sensitive group is empty are discarded.
    """
    if not scored:
        return []
    n_total = len(scored)
    min_count = math.ceil(config.min_support * n_total - 1e-9)
    domains = sensitive_domains(manifest, [s.instance for s in scored])
    reference_items = frozenset(config.reference_group.items())
    legal_set = set(manifest.legal_features)

    transactions = [s.instance.transaction() for s in scored]
    predictions = [s.prediction for s in scored]

    rules: list[DecisionRule] = []
    for g in enumerate_sensitive_itemsets(manifest, domains):
        member_idx = [i for i, t in enumerate(transactions) if g.sensitive <= t]
        if len(member_idx) < min_count:
            continue
        legal_transactions = [
            frozenset(it for it in transactions[i] if it[0] in legal_set)
            for i in member_idx
        ]
        frequent = frequent_itemsets(legal_transactions, min_count,
                                     max_len=config.max_legal_items)
        consequents = [0]
        if g.sensitive == reference_items:
            consequents.append(1)
        for legal_items, ante_count in frequent.items():
            antecedent = Itemset(sensitive=g.sensitive, legal=legal_items)
            hit_idx = [i for i in member_idx
                       if legal_items <= transactions[i]]
            for y in consequents:
                rule_count = sum(1 for i in hit_idx if predictions[i] == y)
                support = rule_count / n_total
                if support + 1e-12 < config.min_support:
                    continue
                conf = rule_count / ante_count
                if conf + 1e-12 < config.min_confidence:
                    continue
                neg_idx = [i for i, t in enumerate(transactions)
                           if antecedent.verified_negated_by(t)]
                if not neg_idx:
                    continue  # slift undefined, rule discarded
                neg_hits = sum(1 for i in neg_idx if predictions[i] == y)
                slift = conf - neg_hits / len(neg_idx)
                _, p = two_proportion_z(rule_count, ante_count,
                                        neg_hits, len(neg_idx))
                rules.append(DecisionRule(
                    antecedent=antecedent, consequent=y, support=support,
                    confidence=conf, slift=slift, p_value=p,
                    n_group=ante_count, n_negated=len(neg_idx)))
    return rules


def filter_high_slift(rules: Iterable[DecisionRule],
                      alpha: float = 0.01) -> list[DecisionRule]:
    """Keep significant rules whose negated group flips to the other class."""
    return [r for r in rules
            if r.p_value < alpha and r.confidence - r.slift < 0.5]


def rule_applies(rule: DecisionRule, scored: ScoredInstance) -> bool:
    """The instance verifies the antecedent and was predicted the consequent."""
    return (rule.antecedent.verified_by(scored.instance.transaction())
            and scored.prediction == rule.consequent)


def matching_rules(rules: Sequence[DecisionRule],
                   scored: ScoredInstance) -> list[DecisionRule]:
    """All applicable rules, strongest |slift| first."""
    hits = [r for r in rules if rule_applies(r, scored)]
    hits.sort(key=lambda r: (-abs(r.slift), r.antecedent.describe()))
    return hits


def rule_to_dict(rule: DecisionRule) -> dict:
    return {
        "antecedent": {
            "sensitive": {c: v for c, v in sorted(rule.antecedent.sensitive)},
            "legal": {c: v for c, v in sorted(rule.antecedent.legal)},
        },
        "consequent": rule.consequent,
        "support": rule.support,
        "confidence": rule.confidence,
        "slift": rule.slift,
        "p_value": rule.p_value,
        "kind": rule.kind,
        "negated_confidence": rule.negated_confidence,
        "n_group": rule.n_group,
        "n_negated": rule.n_negated,
    }


def rule_from_dict(d: Mapping) -> DecisionRule:
    ante = Itemset(
        sensitive=frozenset(d["antecedent"]["sensitive"].items()),
        legal=frozenset(d["antecedent"]["legal"].items()),
    )
    return DecisionRule(
        antecedent=ante, consequent=int(d["consequent"]),
        support=d["support"], confidence=d["confidence"],
        slift=d["slift"], p_value=d["p_value"],
        n_group=d.get("n_group", 0), n_negated=d.get("n_negated", 0))


def save_rules(rules: Sequence[DecisionRule], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([rule_to_dict(r) for r in rules], fh, indent=2)


def load_rules(path: str | Path) -> list[DecisionRule]:
    with open(path, "r", encoding="utf-8") as fh:
        return [rule_from_dict(d) for d in json.load(fh)]
