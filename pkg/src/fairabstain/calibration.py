"""Rejection-budget computation and threshold calibration.

The second validation set is split into a fair and an unfair part by
combining the mined rules (global check) with situation testing
(local check). The coverage target c and the unfair reject weight w_u
then fix how many rejections go to each part, and the two confidence
thresholds are read off the sorted confidence lists.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

from .classifier import ScoredInstance
from .errors import SituationTestError
from .manifest import DatasetManifest, Instance
from .rules import DecisionRule, matching_rules, rule_from_dict, rule_to_dict
from .situation import STConfig, STResult, SituationTester

# Sentinel thresholds for degenerate budgets. Confidences live in
# [0.5, 1], so 0.0 sits below every value and 2.0 above every value.
TAU_BELOW_MIN = 0.0
TAU_ABOVE_MAX = 2.0


def _ceil(x: float) -> int:
    # guards against float noise pushing an exact integer over the edge
    return math.ceil(x - 1e-9)


@dataclass(frozen=True)
class FairnessVerdict:
    unfair: bool
    rule: Optional[DecisionRule] = None
    situation: Optional[STResult] = None
    st_failed: bool = False
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "unfair": self.unfair,
            "rule": rule_to_dict(self.rule) if self.rule else None,
            "situation": self.situation.to_dict() if self.situation else None,
            "st_failed": self.st_failed,
            "note": self.note,
        }


@dataclass(frozen=True)
class RejectBudget:
    N: int
    N_u: int
    N_rej: int
    N_ufr: int
    N_ucr: int
    c: float
    w_u: float

    @property
    def N_f(self) -> int:
        return self.N - self.N_u

    def to_dict(self) -> dict:
        return {"N": self.N, "N_u": self.N_u, "N_f": self.N_f,
                "N_rej": self.N_rej, "N_ufr": self.N_ufr, "N_ucr": self.N_ucr,
                "c": self.c, "w_u": self.w_u}


def compute_budget(N: int, N_u: int, c: float, w_u: float) -> RejectBudget:
    """Total, unfairness-based and uncertainty-based rejection counts."""
    if not 0.0 <= c <= 1.0:
        raise ValueError(f"coverage must be in [0,1], got {c}")
    if not 0.0 <= w_u <= 1.0:
        raise ValueError(f"unfair reject weight must be in [0,1], got {w_u}")
    if N_u > N:
        raise ValueError("N_u cannot exceed N")
    n_rej = _ceil((1.0 - c) * N)
    n_ufr = min(_ceil(n_rej * w_u), N_u)
    n_ucr = n_rej - n_ufr
    return RejectBudget(N=N, N_u=N_u, N_rej=n_rej, N_ufr=n_ufr, N_ucr=n_ucr,
                        c=c, w_u=w_u)


def partition_val2(scored_val2: Sequence[ScoredInstance],
                   rules: Sequence[DecisionRule],
                   tester: SituationTester,
                   ) -> tuple[list[ScoredInstance], list[ScoredInstance],
                              dict[str, FairnessVerdict]]:
    """Split scored instances into fair and unfair parts with verdicts.

    An instance is unfair iff some rule applies to it and the situation
    test flags it; the verdict cites the strongest matching rule. A
    failed situation test leaves the instance fair and is recorded.
    """
    fair, unfair = [], []
    verdicts: dict[str, FairnessVerdict] = {}
    for s in scored_val2:
        verdicts[s.instance.id] = v = assess_fairness(s, rules, tester)
        (unfair if v.unfair else fair).append(s)
    return fair, unfair, verdicts


def assess_fairness(scored: ScoredInstance, rules: Sequence[DecisionRule],
                    tester: SituationTester) -> FairnessVerdict:
    matches = matching_rules(rules, scored)
    if not matches:
        return FairnessVerdict(unfair=False)
    rule = matches[0]
    try:
        st = tester.test(scored.instance)
    except SituationTestError as exc:
        return FairnessVerdict(unfair=False, rule=rule, st_failed=True,
                               note=str(exc))
    return FairnessVerdict(unfair=st.flagged, rule=rule, situation=st)


def calibrate_thresholds(fair: Sequence[ScoredInstance],
                         unfair: Sequence[ScoredInstance],
                         budget: RejectBudget) -> tuple[float, float]:
    """Confidence thresholds tau_f and tau_u matching the budget.

    tau_f is chosen so that exactly N_ucr fair instances sit strictly
    below it; tau_u so that exactly N_ufr unfair instances sit at or
    above it. Confidence ties can overshoot either count; degenerate
    budgets use the sentinels.
    """
    fair_conf = sorted(s.confidence for s in fair)
    unfair_conf = sorted((s.confidence for s in unfair), reverse=True)

    if budget.N_ucr <= 0:
        tau_f = TAU_BELOW_MIN
    elif budget.N_ucr >= len(fair_conf):
        tau_f = TAU_ABOVE_MAX
    else:
        tau_f = fair_conf[budget.N_ucr]

    if budget.N_ufr <= 0:
        tau_u = TAU_ABOVE_MAX
    elif budget.N_ufr >= len(unfair_conf):
        tau_u = TAU_BELOW_MIN
    else:
        tau_u = unfair_conf[budget.N_ufr - 1]
    return tau_f, tau_u


def ubac_threshold(confidences: Sequence[float], c: float) -> float:
    """Plug-in threshold leaving ceil((1-c)N) calibration confidences below it."""
    n = len(confidences)
    n_rej = _ceil((1.0 - c) * n)
    ordered = sorted(confidences)
    if n_rej <= 0:
        return TAU_BELOW_MIN
    if n_rej >= n:
        return TAU_ABOVE_MAX
    return ordered[n_rej]


def train_digest(train: Sequence[Instance]) -> str:
    h = hashlib.sha256()
    for x in sorted(train, key=lambda i: i.id):
        h.update(x.id.encode())
        h.update(json.dumps(sorted(x.values.items())).encode())
        h.update(str(x.label).encode())
    return h.hexdigest()


@dataclass(frozen=True)
class RejectorModel:
    rules: tuple[DecisionRule, ...]
    st_config: STConfig
    tau_f: float
    tau_u: float
    budget: RejectBudget
    train_digest: str
    ubac_tau: float

    def to_dict(self) -> dict:
        return {
            "rules": [rule_to_dict(r) for r in self.rules],
            "st_config": self.st_config.to_dict(),
            "tau_f": self.tau_f,
            "tau_u": self.tau_u,
            "budget": self.budget.to_dict(),
            "train_digest": self.train_digest,
            "ubac_tau": self.ubac_tau,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "RejectorModel":
        b = d["budget"]
        return cls(
            rules=tuple(rule_from_dict(r) for r in d["rules"]),
            st_config=STConfig.from_dict(d["st_config"]),
            tau_f=d["tau_f"], tau_u=d["tau_u"],
            budget=RejectBudget(N=b["N"], N_u=b["N_u"], N_rej=b["N_rej"],
                                N_ufr=b["N_ufr"], N_ucr=b["N_ucr"],
                                c=b["c"], w_u=b["w_u"]),
            train_digest=d["train_digest"],
            ubac_tau=d["ubac_tau"],
        )

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    @classmethod
    def load(cls, path: str | Path) -> "RejectorModel":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def fit_rejector(scored_val2: Sequence[ScoredInstance],
                 rules: Sequence[DecisionRule],
                 train: Sequence[Instance],
                 manifest: DatasetManifest,
                 st_config: STConfig,
                 c: float, w_u: float) -> tuple[RejectorModel, dict[str, FairnessVerdict]]:
    """Run the calibration step end to end and return the fitted model."""
    tester = SituationTester(train, manifest, st_config)
    fair, unfair, verdicts = partition_val2(scored_val2, rules, tester)
    budget = compute_budget(len(scored_val2), len(unfair), c, w_u)
    tau_f, tau_u = calibrate_thresholds(fair, unfair, budget)
    ubac_tau = ubac_threshold([s.confidence for s in scored_val2], c)
    model = RejectorModel(rules=tuple(rules), st_config=st_config,
                          tau_f=tau_f, tau_u=tau_u, budget=budget,
                          train_digest=train_digest(train), ubac_tau=ubac_tau)
    return model, verdicts
