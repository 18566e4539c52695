"""Evaluation suite: selective performance plus per-group error and
positive-decision rates, aggregated over test resamples.

All rates are oriented by the manifest's desirable label (class 1).
Flipped outcomes count as ordinary predictions with the flipped label.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .engine import SelectiveOutcome
from .manifest import DatasetManifest, Instance

log = logging.getLogger(__name__)

RATE_NAMES = ("fnr", "fpr", "pdr")
PERF_NAMES = ("accuracy", "precision", "recall")


def group_key(instance: Instance, manifest: DatasetManifest) -> str:
    return "|".join(f"{f}={instance.values[f]}" for f in manifest.sensitive_features)


@dataclass(frozen=True)
class MetricSummary:
    mean: float
    stderr: float
    n_samples: int

    def to_dict(self) -> dict:
        return {"mean": self.mean, "stderr": self.stderr, "n_samples": self.n_samples}


def _summarize(values: Sequence[Optional[float]], name: str) -> Optional[MetricSummary]:
    defined = [v for v in values if v is not None]
    if not defined:
        log.warning("metric %s undefined in every resample", name)
        return None
    if len(defined) < len(values):
        log.warning("metric %s undefined in %d/%d resamples", name,
                    len(values) - len(defined), len(values))
    arr = np.array(defined)
    stderr = float(arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else 0.0
    return MetricSummary(float(arr.mean()), stderr, len(arr))


def _rate(num: int, den: int) -> Optional[float]:
    return num / den if den else None


def _sample_stats(outcomes: Sequence[SelectiveOutcome],
                  by_id: Mapping[str, Instance],
                  manifest: DatasetManifest,
                  sample_ids: set) -> dict:
    """Performance and per-group rates for one test resample."""
    sel = [o for o in outcomes if o.instance_id in sample_ids]
    accepted = [o for o in sel if o.accepted]
    n = len(sel)

    tp = fp = tn = fn = 0
    per_group: dict[str, dict[str, int]] = {}
    for o in accepted:
        inst = by_id[o.instance_id]
        y, yhat = inst.label, o.emitted_label
        if yhat == 1 and y == 1:
            tp += 1
        elif yhat == 1 and y == 0:
            fp += 1
        elif yhat == 0 and y == 0:
            tn += 1
        else:
            fn += 1
        g = per_group.setdefault(group_key(inst, manifest),
                                 {"pos": 0, "neg": 0, "emit1_pos": 0,
                                  "emit1_neg": 0, "emit1": 0, "n": 0})
        g["n"] += 1
        g["emit1"] += yhat
        if y == 1:
            g["pos"] += 1
            g["emit1_pos"] += yhat
        else:
            g["neg"] += 1
            g["emit1_neg"] += yhat

    rates = {}
    for key, g in per_group.items():
        rates[key] = {
            "fnr": _rate(g["pos"] - g["emit1_pos"], g["pos"]),
            "fpr": _rate(g["emit1_neg"], g["neg"]),
            "pdr": _rate(g["emit1"], g["n"]),
            "n": g["n"],
        }
    return {
        "coverage": len(accepted) / n if n else None,
        "accuracy": _rate(tp + tn, len(accepted)),
        "precision": _rate(tp, tp + fp),
        "recall": _rate(tp, tp + fn),
        "groups": rates,
    }


@dataclass(frozen=True)
class MethodReport:
    method: str
    performance: dict
    coverage: Optional[MetricSummary]
    groups: dict
    disparity: dict

    def to_dict(self) -> dict:
        def opt(s):
            return s.to_dict() if s else None
        return {
            "method": self.method,
            "performance": {k: opt(v) for k, v in self.performance.items()},
            "coverage": opt(self.coverage),
            "groups": {k: {m: opt(v) if m in RATE_NAMES else v
                           for m, v in g.items()}
                       for k, g in self.groups.items()},
            "disparity": self.disparity,
        }


def evaluate_method(outcomes: Sequence[SelectiveOutcome],
                    instances: Sequence[Instance],
                    manifest: DatasetManifest,
                    resamples: Optional[Sequence[Sequence[Instance]]] = None,
                    ) -> MethodReport:
    by_id = {x.id: x for x in instances}
    parts = resamples if resamples else [instances]
    samples = [_sample_stats(outcomes, by_id, manifest,
                             {x.id for x in part}) for part in parts]
    method = outcomes[0].method if outcomes else "?"

    performance = {name: _summarize([s[name] for s in samples], name)
                   for name in PERF_NAMES}
    coverage = _summarize([s["coverage"] for s in samples], "coverage")

    group_keys = sorted({k for s in samples for k in s["groups"]})
    groups = {}
    for key in group_keys:
        entry = {}
        for rate in RATE_NAMES:
            entry[rate] = _summarize(
                [s["groups"][key][rate] if key in s["groups"] else None
                 for s in samples], f"{key}:{rate}")
        entry["count"] = sum(s["groups"][key]["n"] for s in samples
                             if key in s["groups"])
        groups[key] = entry

    disparity = {}
    for rate in RATE_NAMES:
        means = [groups[k][rate].mean for k in group_keys
                 if groups[k][rate] is not None]
        if means:
            disparity[rate] = {"range": max(means) - min(means),
                               "std": float(np.std(means))}
        else:
            disparity[rate] = {"range": None, "std": None}
    return MethodReport(method=method, performance=performance,
                        coverage=coverage, groups=groups, disparity=disparity)


def evaluate(outcomes_by_method: Mapping[str, Sequence[SelectiveOutcome]],
             instances: Sequence[Instance],
             manifest: DatasetManifest,
             resamples: Optional[Sequence[Sequence[Instance]]] = None,
             ) -> dict[str, MethodReport]:
    return {m: evaluate_method(o, instances, manifest, resamples)
            for m, o in outcomes_by_method.items()}


def tidy_rows(reports: Mapping[str, MethodReport],
              c: Optional[float] = None,
              w_u: Optional[float] = None) -> list[dict]:
    """Flatten reports into (method, c, w_u, metric, value, stderr) rows."""
    rows = []

    def add(method, metric, summary):
        if summary is None:
            return
        rows.append({"method": method, "c": c, "w_u": w_u, "metric": metric,
                     "value": summary.mean, "stderr": summary.stderr})

    for method, rep in reports.items():
        for name, s in rep.performance.items():
            add(method, name, s)
        add(method, "coverage", rep.coverage)
        for rate in RATE_NAMES:
            d = rep.disparity[rate]
            if d["range"] is not None:
                rows.append({"method": method, "c": c, "w_u": w_u,
                             "metric": f"{rate}_range", "value": d["range"],
                             "stderr": 0.0})
                rows.append({"method": method, "c": c, "w_u": w_u,
                             "metric": f"{rate}_std", "value": d["std"],
                             "stderr": 0.0})
    return rows


def write_rows_csv(rows: Sequence[Mapping], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["method", "c", "w_u", "metric",
                                                "value", "stderr"])
        writer.writeheader()
        writer.writerows(rows)


def sweep(grid: Sequence[tuple[float, float]],
          scored_val2, scored_test, rules, train, manifest, st_config,
          resamples=None) -> list[dict]:
    """Re-calibrate, re-decide and re-evaluate per (c, w_u) grid cell."""
    from .calibration import fit_rejector
    from .engine import decide_all

    if not grid:
        raise ValueError("sweep grid is empty")
    rows = []
    for c, w_u in grid:
        try:
            model, _ = fit_rejector(scored_val2, rules, train, manifest,
                                    st_config, c, w_u)
            outcomes = decide_all(model, scored_test, train, manifest)
            test_instances = [s.instance for s in scored_test]
            reports = evaluate(outcomes, test_instances, manifest, resamples)
            rows.extend(tidy_rows(reports, c=c, w_u=w_u))
        except Exception as exc:  # a failed cell must not abort the sweep
            log.warning("sweep cell c=%s w_u=%s failed: %s", c, w_u, exc)
            rows.append({"method": "ERROR", "c": c, "w_u": w_u,
                         "metric": "error", "value": float("nan"),
                         "stderr": float("nan")})
    return rows


def plot_group_metrics(reports: Mapping[str, MethodReport],
                       path: str | Path) -> None:
    """Grouped bar chart per rate, one panel each, written as SVG."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    methods = list(reports)
    group_keys = sorted({k for r in reports.values() for k in r.groups})
    fig, axes = plt.subplots(1, len(RATE_NAMES), figsize=(5 * len(RATE_NAMES), 4))
    for ax, rate in zip(np.atleast_1d(axes), RATE_NAMES):
        width = 0.8 / max(len(methods), 1)
        xs = np.arange(len(group_keys))
        for i, m in enumerate(methods):
            vals = [reports[m].groups.get(k, {}).get(rate) for k in group_keys]
            heights = [v.mean if v else 0.0 for v in vals]
            errs = [v.stderr if v else 0.0 for v in vals]
            ax.bar(xs + i * width, heights, width, yerr=errs, label=m)
        ax.set_title(rate.upper())
        ax.set_xticks(xs + width * (len(methods) - 1) / 2)
        ax.set_xticklabels(group_keys, rotation=45, ha="right", fontsize=7)
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def plot_sweep(rows: Sequence[Mapping], metric: str, path: str | Path) -> None:
    """Metric as a function of coverage, one line per (method, w_u)."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    series: dict[tuple, list[tuple[float, float]]] = {}
    for r in rows:
        if r["metric"] != metric or r["method"] == "ERROR":
            continue
        series.setdefault((r["method"], r["w_u"]), []).append((r["c"], r["value"]))
    fig, ax = plt.subplots(figsize=(6, 4))
    for (method, w_u), pts in sorted(series.items()):
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o",
                label=f"{method} w_u={w_u}")
    ax.set_xlabel("coverage c")
    ax.set_ylabel(metric)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
