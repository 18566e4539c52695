"""Human review service over a pipeline artifact directory.

Serves the unfairness-based rejections with their full explanation
payloads, accepts reviewer decisions into an append-only JSON-lines
log, and recomputes the fairness report with reviewer-amended labels
replacing the abstentions.
"""
from __future__ import annotations

import json
import threading
import time
from pathlib import Path
from typing import Literal, Optional

from fastapi import FastAPI, HTTPException
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field, model_validator

from . import metrics as metrics_mod
from .engine import (ACTION_ABSTAIN_UNFAIR, ACTION_PREDICT, SelectiveOutcome,
                     load_outcome_dicts)
from .manifest import DatasetManifest, instances_from_dicts
from .pipeline import RunConfig
from .splits import resample_test

DECISION_ACTIONS = ("keep_original", "override_label", "uphold_abstain")


class ReviewDecision(BaseModel):
    reviewer_id: str = Field(min_length=1)
    action: Literal["keep_original", "override_label", "uphold_abstain"]
    override_label: Optional[int] = None
    rationale: str = ""

    @model_validator(mode="after")
    def _check_override(self):
        if self.action == "override_label":
            if self.override_label not in (0, 1):
                raise ValueError("override_label must be 0 or 1 for override_label actions")
        return self


class ReviewStore:
    """Reads pipeline artifacts; owns the append-only decision log."""

    def __init__(self, artifact_dir: str | Path):
        self.dir = Path(artifact_dir)
        self.manifest = DatasetManifest.load(self.dir / "manifest.json")
        self.config = RunConfig.load(self.dir / "run_config.json")
        with open(self.dir / "test_instances.json", encoding="utf-8") as fh:
            self.test_instances = instances_from_dicts(json.load(fh))
        self.outcomes = {
            m: load_outcome_dicts(self.dir / f"outcomes_{m}.jsonl")
            for m in ("FC", "UBAC", "IFAC")
        }
        self.rejections = {o["id"]: o for o in self.outcomes["IFAC"]
                           if o["action"] == ACTION_ABSTAIN_UNFAIR}
        self.log_path = self.dir / "decisions.jsonl"
        self._write_lock = threading.Lock()

    def decisions(self) -> list[dict]:
        if not self.log_path.exists():
            return []
        with open(self.log_path, encoding="utf-8") as fh:
            return [json.loads(line) for line in fh if line.strip()]

    def active_decisions(self) -> dict[str, dict]:
        # later log entries supersede earlier ones for the same outcome
        active: dict[str, dict] = {}
        for d in self.decisions():
            active[d["outcome_id"]] = d
        return active

    def append_decision(self, outcome_id: str, decision: ReviewDecision) -> dict:
        record = {
            "outcome_id": outcome_id,
            "reviewer_id": decision.reviewer_id,
            "action": decision.action,
            "override_label": decision.override_label,
            "rationale": decision.rationale,
            "timestamp": time.time(),
        }
        with self._write_lock:
            with open(self.log_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, sort_keys=True) + "\n")
        return record

    def amended_outcomes(self, decisions: Optional[dict[str, dict]] = None,
                         ) -> dict[str, list[SelectiveOutcome]]:
        """Outcome objects for evaluation, with reviewer amendments applied."""
        if decisions is None:
            decisions = self.active_decisions()
        out: dict[str, list[SelectiveOutcome]] = {}
        for method, dicts in self.outcomes.items():
            objs = []
            for d in dicts:
                action = d["action"]
                emitted = d["emitted_label"]
                if (method == "IFAC" and action == ACTION_ABSTAIN_UNFAIR
                        and d["id"] in decisions):
                    dec = decisions[d["id"]]
                    if dec["action"] == "keep_original":
                        action, emitted = ACTION_PREDICT, d["original_prediction"]
                    elif dec["action"] == "override_label":
                        action, emitted = ACTION_PREDICT, dec["override_label"]
                objs.append(SelectiveOutcome(
                    instance_id=d["id"], method=method, action=action,
                    emitted_label=emitted, confidence=d["confidence"],
                    original_prediction=d["original_prediction"]))
            out[method] = objs
        return out

    def report(self, decisions: Optional[dict[str, dict]] = None) -> dict:
        resamples = resample_test(self.test_instances,
                                  self.config.resample_parts, self.config.seed)
        reports = metrics_mod.evaluate(self.amended_outcomes(decisions),
                                       self.test_instances, self.manifest,
                                       resamples)
        return {m: r.to_dict() for m, r in reports.items()}


def _rejection_summary(o: dict) -> dict:
    rule = (o.get("verdict") or {}).get("rule")
    st = (o.get("verdict") or {}).get("situation")
    return {
        "id": o["id"],
        "confidence": o["confidence"],
        "original_prediction": o["original_prediction"],
        "rule": rule,
        "slift": rule["slift"] if rule else None,
        "situation_score": st["score"] if st else None,
    }


def create_app(artifact_dir: str | Path,
               frontend_dir: Optional[str | Path] = None) -> FastAPI:
    store = ReviewStore(artifact_dir)
    app = FastAPI(title="fairabstain review console")
    app.state.store = store

    @app.get("/rejections")
    def list_rejections(page: int = 1, page_size: int = 20):
        if page < 1 or page_size < 1:
            raise HTTPException(status_code=422, detail="page and page_size must be >= 1")
        ids = sorted(store.rejections)
        start = (page - 1) * page_size
        decisions = store.active_decisions()
        items = []
        for i in ids[start:start + page_size]:
            s = _rejection_summary(store.rejections[i])
            s["decision"] = decisions.get(i)
            items.append(s)
        return {"total": len(ids), "page": page, "page_size": page_size,
                "items": items}

    @app.get("/rejections/{outcome_id}")
    def get_rejection(outcome_id: str):
        o = store.rejections.get(outcome_id)
        if o is None:
            raise HTTPException(status_code=404,
                                detail=f"no unfairness rejection with id {outcome_id!r}")
        inst = next((x for x in store.test_instances if x.id == outcome_id), None)
        history = [d for d in store.decisions() if d["outcome_id"] == outcome_id]
        return {
            "outcome": o,
            "instance": {"id": inst.id, "values": dict(inst.values),
                         "raw_values": dict(inst.raw_values)} if inst else None,
            "decisions": history,
        }

    @app.post("/rejections/{outcome_id}/decision")
    def post_decision(outcome_id: str, decision: ReviewDecision):
        if outcome_id not in store.rejections:
            raise HTTPException(status_code=404,
                                detail=f"no unfairness rejection with id {outcome_id!r}")
        return store.append_decision(outcome_id, decision)

    @app.get("/report")
    def get_report():
        return store.report()

    if frontend_dir is not None and Path(frontend_dir).exists():
        app.mount("/", StaticFiles(directory=frontend_dir, html=True),
                  name="console")
    return app


def serve(artifact_dir: str | Path, host: str = "127.0.0.1", port: int = 8000,
          frontend_dir: Optional[str | Path] = None) -> None:
    import uvicorn
    uvicorn.run(create_app(artifact_dir, frontend_dir), host=host, port=port)
