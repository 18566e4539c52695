"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 pipeline error.
The output directory of any command honoring --output-dir can be
overridden with the FAIRABSTAIN_OUTPUT_DIR environment variable.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import metrics as metrics_mod
from .calibration import fit_rejector
from .classifier import LogisticItemModel, fit_builtin, load_external
from .engine import load_outcome_dicts
from .errors import DataError, FairabstainError, ManifestError, PipelineError
from .manifest import (DatasetManifest, instances_from_dicts,
                       instances_to_dicts, load_dataset)
from .pipeline import RunConfig, run_pipeline
from .rules import (MiningConfig, filter_high_slift, load_rules, mine_rules,
                    save_rules)
from .situation import STConfig, compute_distance_stats
from .splits import DEFAULT_FRACTIONS, resample_test, split_dataset
from .synthetic import default_spec, write_synthetic


@click.group()
def cli():
    """Fairness-aware abstaining classifier toolkit."""


@cli.command()
@click.option("--n", default=20_000, show_default=True)
@click.option("--beta", default=1.5, show_default=True,
              help="Planted bias against the penalized groups.")
@click.option("--noise", default=0.5, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--output", default="synthetic.csv", show_default=True)
@click.option("--manifest-out", default="manifest.json", show_default=True)
def generate(n, beta, noise, seed, output, manifest_out):
    """Generate a planted-bias synthetic dataset and its manifest."""
    write_synthetic(default_spec(n=n, bias=beta, noise=noise), seed,
                    output, manifest_out)
    click.echo(f"wrote {output} and {manifest_out}")


def _load_instances(path):
    with open(path, encoding="utf-8") as fh:
        return instances_from_dicts(json.load(fh))


def _dump_instances(instances, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(instances_to_dicts(instances), fh)


@cli.command()
@click.option("--dataset", required=True, type=click.Path(exists=True))
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True))
@click.option("--fractions", default=",".join(map(str, DEFAULT_FRACTIONS)),
              show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--output-dir", default="splits", show_default=True)
def split(dataset, manifest_path, fractions, seed, output_dir):
    """Split a dataset into train/val1/val2/test JSON files."""
    manifest = DatasetManifest.load(manifest_path)
    data = load_dataset(dataset, manifest)
    fracs = tuple(float(f) for f in fractions.split(","))
    bundle = split_dataset(data, fracs, seed)
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, part in zip(("train", "val1", "val2", "test"), bundle.parts):
        _dump_instances(part, out / f"{name}.json")
    click.echo(f"wrote splits to {out}")


@cli.command()
@click.option("--train-file", required=True, type=click.Path(exists=True),
              help="train.json produced by `split`.")
@click.option("--output", default="classifier.json", show_default=True)
def train(train_file, output):
    """Fit the built-in logistic classifier."""
    model = fit_builtin(_load_instances(train_file))
    model.save(output)
    click.echo(f"wrote {output}")


def _classifier(spec: str):
    if spec == "builtin":
        raise click.UsageError("pass a classifier.json or an id,p_pos CSV")
    if spec.endswith(".json"):
        return LogisticItemModel.load(spec)
    return load_external(spec)


@cli.command()
@click.option("--val1-file", required=True, type=click.Path(exists=True))
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True))
@click.option("--classifier", required=True,
              help="classifier.json or external id,p_pos CSV.")
@click.option("--min-support", default=0.01, show_default=True)
@click.option("--min-confidence", default=0.85, show_default=True)
@click.option("--alpha", default=0.01, show_default=True)
@click.option("--max-legal-items", default=3, show_default=True)
@click.option("--output", default="rules.json", show_default=True)
def mine(val1_file, manifest_path, classifier, min_support, min_confidence,
         alpha, max_legal_items, output):
    """Mine and filter discriminatory/favoring rules from val1 predictions."""
    manifest = DatasetManifest.load(manifest_path)
    scored = _classifier(classifier).score(_load_instances(val1_file))
    config = MiningConfig(min_support=min_support,
                          min_confidence=min_confidence,
                          significance_alpha=alpha,
                          reference_group=manifest.reference_group,
                          max_legal_items=max_legal_items)
    rules = filter_high_slift(mine_rules(scored, manifest, config), alpha)
    save_rules(rules, output)
    click.echo(f"wrote {len(rules)} rules to {output}")


@cli.command()
@click.option("--val2-file", required=True, type=click.Path(exists=True))
@click.option("--train-file", required=True, type=click.Path(exists=True))
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True))
@click.option("--classifier", required=True)
@click.option("--rules", "rules_path", required=True,
              type=click.Path(exists=True))
@click.option("--c", default=0.80, show_default=True)
@click.option("--w-u", default=1.0, show_default=True)
@click.option("--k", default=10, show_default=True)
@click.option("--t", default=0.3, show_default=True)
@click.option("--output", default="model.json", show_default=True)
def calibrate(val2_file, train_file, manifest_path, classifier, rules_path,
              c, w_u, k, t, output):
    """Estimate the rejection thresholds from val2."""
    manifest = DatasetManifest.load(manifest_path)
    train_instances = _load_instances(train_file)
    scored = _classifier(classifier).score(_load_instances(val2_file))
    st_config = STConfig(k=k, t=t, distance_stats=compute_distance_stats(
        train_instances, manifest))
    model, _ = fit_rejector(scored, load_rules(rules_path), train_instances,
                            manifest, st_config, c, w_u)
    model.save(output)
    click.echo(f"wrote {output} (tau_f={model.tau_f:.4f}, tau_u={model.tau_u:.4f})")


def _run_config(config_file, kwargs) -> RunConfig:
    if config_file:
        base = RunConfig.load(config_file).to_dict()
    else:
        base = RunConfig().to_dict()
    for key, value in kwargs.items():
        if value is not None:
            base[key] = value
    return RunConfig.from_dict(base)


@cli.command()
@click.option("--config", "config_file", type=click.Path(exists=True),
              help="RunConfig JSON; flags override its fields.")
@click.option("--dataset", type=click.Path())
@click.option("--manifest", type=click.Path())
@click.option("--classifier", help="'builtin' or external id,p_pos CSV.")
@click.option("--c", type=float)
@click.option("--w-u", "w_u", type=float)
@click.option("--k", type=int)
@click.option("--t", type=float)
@click.option("--min-support", type=float)
@click.option("--min-confidence", type=float)
@click.option("--alpha", type=float)
@click.option("--seed", type=int)
@click.option("--resample-parts", type=int)
@click.option("--output-dir", type=click.Path())
def run(config_file, **kwargs):
    """Run the full pipeline and write an artifact directory."""
    config = _run_config(config_file, kwargs)
    if not config.dataset or not config.manifest:
        raise click.UsageError("--dataset and --manifest are required "
                               "(directly or via --config)")
    out = run_pipeline(config)
    click.echo(f"artifacts written to {out}")


@cli.command()
@click.option("--artifacts", required=True, type=click.Path(exists=True))
@click.option("--plot/--no-plot", default=False, show_default=True,
              help="Also write SVG charts of the per-group rates.")
def evaluate(artifacts, plot):
    """Print the metric table of a finished run."""
    art = Path(artifacts)
    with open(art / "report.json", encoding="utf-8") as fh:
        report = json.load(fh)
    for method, rep in sorted(report.items()):
        perf = rep["performance"]
        cov = rep["coverage"]
        click.echo(f"{method}: "
                   + " ".join(f"{k}={v['mean']:.3f}±{v['stderr']:.3f}"
                              for k, v in perf.items() if v)
                   + (f" coverage={cov['mean']:.3f}" if cov else ""))
        for rate, d in rep["disparity"].items():
            if d["range"] is not None:
                click.echo(f"  {rate}: range={d['range']:.3f} std={d['std']:.3f}")
    if plot:
        from .review import ReviewStore
        store = ReviewStore(art)
        reports = metrics_mod.evaluate(
            store.amended_outcomes({}), store.test_instances, store.manifest,
            resample_test(store.test_instances, store.config.resample_parts,
                          store.config.seed))
        metrics_mod.plot_group_metrics(reports, art / "group_metrics.svg")
        click.echo(f"wrote {art / 'group_metrics.svg'}")


@cli.command()
@click.option("--dataset", required=True, type=click.Path(exists=True))
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True))
@click.option("--c-grid", default="0.7,0.8,0.9", show_default=True)
@click.option("--wu-grid", default="0.25,1.0", show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--k", default=10, show_default=True)
@click.option("--t", default=0.3, show_default=True)
@click.option("--output", default="sweep.csv", show_default=True)
@click.option("--plot/--no-plot", default=False, show_default=True)
def sweep(dataset, manifest_path, c_grid, wu_grid, seed, k, t, output, plot):
    """Evaluate a grid of (c, w_u) settings on one dataset."""
    manifest = DatasetManifest.load(manifest_path)
    data = load_dataset(dataset, manifest)
    bundle = split_dataset(data, DEFAULT_FRACTIONS, seed)
    model_h = fit_builtin(bundle.train)
    scored_val1 = model_h.score(bundle.val1)
    config = MiningConfig(reference_group=manifest.reference_group)
    rules = filter_high_slift(mine_rules(scored_val1, manifest, config),
                              config.significance_alpha)
    st_config = STConfig(k=k, t=t, distance_stats=compute_distance_stats(
        bundle.train, manifest))
    grid = [(float(c), float(w)) for c in c_grid.split(",")
            for w in wu_grid.split(",")]
    rows = metrics_mod.sweep(grid, model_h.score(bundle.val2),
                             model_h.score(bundle.test), rules, bundle.train,
                             manifest, st_config,
                             resamples=resample_test(bundle.test, 10, seed))
    metrics_mod.write_rows_csv(rows, output)
    click.echo(f"wrote {output}")
    if plot:
        for metric in ("accuracy", "pdr_range", "pdr_std"):
            svg = Path(output).with_suffix(f".{metric}.svg")
            metrics_mod.plot_sweep(rows, metric, svg)
            click.echo(f"wrote {svg}")


@cli.command()
@click.option("--artifacts", required=True, type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--frontend", type=click.Path(),
              help="Directory of built console assets to serve at /.")
def serve(artifacts, host, port, frontend):
    """Serve the human review API (and console, if built)."""
    from .review import serve as serve_app
    serve_app(artifacts, host=host, port=port, frontend_dir=frontend)


@cli.command()
@click.argument("outcome_id")
@click.option("--artifacts", required=True, type=click.Path(exists=True))
def explain(outcome_id, artifacts):
    """Print the explanation payload behind one outcome."""
    outcomes = load_outcome_dicts(Path(artifacts) / "outcomes_IFAC.jsonl")
    match = next((o for o in outcomes if o["id"] == outcome_id), None)
    if match is None:
        raise DataError(f"no outcome with id {outcome_id!r}")
    click.echo(json.dumps(match, indent=2, sort_keys=True))


def main(argv=None):
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return 0 if exc.exit_code == 0 else 1
    except (click.UsageError, ValueError) as exc:
        click.echo(f"usage error: {exc}", err=True)
        return 1
    except (DataError, ManifestError) as exc:
        click.echo(f"data error: {exc}", err=True)
        return 2
    except PipelineError as exc:
        if isinstance(exc.cause, (DataError, ManifestError)):
            click.echo(f"data error: {exc}", err=True)
            return 2
        if isinstance(exc.cause, ValueError):
            click.echo(f"usage error: {exc}", err=True)
            return 1
        click.echo(f"pipeline error: {exc}", err=True)
        return 3
    except FairabstainError as exc:
        click.echo(f"pipeline error: {exc}", err=True)
        return 3


if __name__ == "__main__":
    sys.exit(main())
