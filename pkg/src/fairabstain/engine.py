"""Apply the fitted rejector and the FC/UBAC baselines to scored instances."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .calibration import FairnessVerdict, RejectorModel, assess_fairness
from .classifier import ScoredInstance
from .manifest import DatasetManifest, Instance
from .situation import SituationTester

ACTION_PREDICT = "predict"
ACTION_ABSTAIN_UNCERTAIN = "abstain_uncertain"
ACTION_ABSTAIN_UNFAIR = "abstain_unfair"
ACTION_FLIP = "flip"

METHOD_FC = "FC"
METHOD_UBAC = "UBAC"
METHOD_IFAC = "IFAC"


@dataclass(frozen=True)
class SelectiveOutcome:
    instance_id: str
    method: str
    action: str
    emitted_label: Optional[int]
    confidence: float
    original_prediction: int
    verdict: Optional[FairnessVerdict] = None

    @property
    def accepted(self) -> bool:
        return self.action in (ACTION_PREDICT, ACTION_FLIP)

    def to_dict(self) -> dict:
        return {
            "id": self.instance_id,
            "method": self.method,
            "action": self.action,
            "emitted_label": self.emitted_label,
            "confidence": self.confidence,
            "original_prediction": self.original_prediction,
            "verdict": self.verdict.to_dict() if self.verdict else None,
        }


def decide_fc(scored: ScoredInstance) -> SelectiveOutcome:
    """Full-coverage baseline: always emit the classifier's prediction."""
    return SelectiveOutcome(scored.instance.id, METHOD_FC, ACTION_PREDICT,
                            scored.prediction, scored.confidence,
                            scored.prediction)


def decide_ubac(threshold: float, scored: ScoredInstance) -> SelectiveOutcome:
    """Plug-in baseline: predict iff confidence reaches the threshold."""
    if scored.confidence >= threshold:
        return SelectiveOutcome(scored.instance.id, METHOD_UBAC, ACTION_PREDICT,
                                scored.prediction, scored.confidence,
                                scored.prediction)
    return SelectiveOutcome(scored.instance.id, METHOD_UBAC,
                            ACTION_ABSTAIN_UNCERTAIN, None, scored.confidence,
                            scored.prediction)


def decide_ifac(model: RejectorModel, scored: ScoredInstance,
                tester: SituationTester) -> SelectiveOutcome:
    """Four-way decision: the fairness checks are recomputed at decide time."""
    verdict = assess_fairness(scored, model.rules, tester)
    conf = scored.confidence
    if not verdict.unfair:
        if conf >= model.tau_f:
            action, label = ACTION_PREDICT, scored.prediction
        else:
            action, label = ACTION_ABSTAIN_UNCERTAIN, None
    else:
        if conf < model.tau_u:
            action, label = ACTION_FLIP, 1 - scored.prediction
        else:
            action, label = ACTION_ABSTAIN_UNFAIR, None
    # only the unfair path carries an evidence payload worth emitting
    keep_verdict = verdict if (verdict.rule is not None) else None
    return SelectiveOutcome(scored.instance.id, METHOD_IFAC, action, label,
                            conf, scored.prediction, keep_verdict)


def decide_all(model: RejectorModel, scored: Sequence[ScoredInstance],
               train: Sequence[Instance], manifest: DatasetManifest,
               ) -> dict[str, list[SelectiveOutcome]]:
    """Run all three methods over a scored set."""
    tester = SituationTester(train, manifest, model.st_config)
    return {
        METHOD_FC: [decide_fc(s) for s in scored],
        METHOD_UBAC: [decide_ubac(model.ubac_tau, s) for s in scored],
        METHOD_IFAC: [decide_ifac(model, s, tester) for s in scored],
    }


def save_outcomes(outcomes: Iterable[SelectiveOutcome], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for o in outcomes:
            fh.write(json.dumps(o.to_dict(), sort_keys=True) + "\n")


def load_outcome_dicts(path: str | Path) -> list[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
