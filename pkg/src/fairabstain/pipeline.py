"""End-to-end orchestration: split, fit/score, mine, calibrate, decide,
evaluate, and write the artifact directory consumed by the CLI,
the review service and the console."""
from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import metrics as metrics_mod
from .calibration import fit_rejector
from .classifier import fit_builtin, load_external
from .engine import decide_all, save_outcomes
from .errors import PipelineError
from .manifest import DatasetManifest, instances_to_dicts, load_dataset
from .rules import MiningConfig, filter_high_slift, mine_rules, save_rules
from .situation import STConfig, compute_distance_stats
from .splits import DEFAULT_FRACTIONS, resample_test, split_dataset

OUTPUT_DIR_ENV = "FAIRABSTAIN_OUTPUT_DIR"


@dataclass
class RunConfig:
    dataset: str = ""
    manifest: str = ""
    classifier: str = "builtin"          # "builtin" or path to id,p_pos CSV
    c: float = 0.80
    w_u: float = 1.0
    k: int = 10
    t: float = 0.3
    min_support: float = 0.01
    min_confidence: float = 0.85
    alpha: float = 0.01
    max_legal_items: int = 3
    fractions: tuple = DEFAULT_FRACTIONS
    resample_parts: int = 10
    seed: int = 0
    output_dir: str = "artifacts"

    def resolved_output_dir(self) -> Path:
        return Path(os.environ.get(OUTPUT_DIR_ENV, self.output_dir))

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["fractions"] = list(self.fractions)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        kwargs = {k: v for k, v in d.items() if k in known}
        if "fractions" in kwargs:
            kwargs["fractions"] = tuple(kwargs["fractions"])
        return cls(**kwargs)

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _stage(name: str):
    """Wrap a stage so failures carry the stage name."""
    def deco(fn):
        def wrapper(*a, **kw):
            try:
                return fn(*a, **kw)
            except PipelineError:
                raise
            except Exception as exc:
                raise PipelineError(name, exc) from exc
        return wrapper
    return deco


def run_pipeline(config: RunConfig) -> Path:
    """Execute the full pipeline and return the artifact directory."""
    out = config.resolved_output_dir()
    out.mkdir(parents=True, exist_ok=True)

    manifest = _stage("load-manifest")(DatasetManifest.load)(config.manifest)
    data = _stage("load-dataset")(load_dataset)(config.dataset, manifest)
    bundle = _stage("split")(split_dataset)(data, config.fractions, config.seed)

    @_stage("train")
    def _train():
        if config.classifier == "builtin":
            return fit_builtin(bundle.train)
        return load_external(config.classifier)
    model_h = _train()

    @_stage("mine")
    def _mine():
        scored_val1 = model_h.score(bundle.val1)
        mining = MiningConfig(min_support=config.min_support,
                              min_confidence=config.min_confidence,
                              significance_alpha=config.alpha,
                              reference_group=manifest.reference_group,
                              max_legal_items=config.max_legal_items)
        candidates = mine_rules(scored_val1, manifest, mining)
        return filter_high_slift(candidates, mining.significance_alpha)
    rules = _mine()

    @_stage("calibrate")
    def _calibrate():
        scored_val2 = model_h.score(bundle.val2)
        st_config = STConfig(k=config.k, t=config.t,
                             distance_stats=compute_distance_stats(
                                 bundle.train, manifest))
        return fit_rejector(scored_val2, rules, bundle.train, manifest,
                            st_config, config.c, config.w_u)
    rejector, _ = _calibrate()

    @_stage("decide")
    def _decide():
        scored_test = model_h.score(bundle.test)
        return scored_test, decide_all(rejector, scored_test, bundle.train,
                                       manifest)
    scored_test, outcomes = _decide()

    @_stage("evaluate")
    def _evaluate():
        resamples = resample_test(bundle.test, config.resample_parts,
                                  config.seed)
        return metrics_mod.evaluate(outcomes, bundle.test, manifest, resamples)
    reports = _evaluate()

    @_stage("write-artifacts")
    def _write():
        manifest.save(out / "manifest.json")
        with open(out / "run_config.json", "w", encoding="utf-8") as fh:
            json.dump(config.to_dict(), fh, indent=2, sort_keys=True)
        save_rules(rules, out / "rules.json")
        rejector.save(out / "model.json")
        for method, method_outcomes in outcomes.items():
            save_outcomes(method_outcomes, out / f"outcomes_{method}.jsonl")
        with open(out / "report.json", "w", encoding="utf-8") as fh:
            json.dump({m: r.to_dict() for m, r in reports.items()}, fh,
                      indent=2, sort_keys=True)
        metrics_mod.write_rows_csv(metrics_mod.tidy_rows(
            reports, c=config.c, w_u=config.w_u), out / "report.csv")
        with open(out / "test_instances.json", "w", encoding="utf-8") as fh:
            json.dump(instances_to_dicts(bundle.test), fh)
        with open(out / "train_instances.json", "w", encoding="utf-8") as fh:
            json.dump(instances_to_dicts(bundle.train), fh)
    _write()
    return out
