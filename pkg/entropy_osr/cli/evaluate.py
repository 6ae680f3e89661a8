import click

from ..data.writers.csv import CSVWriter
from ..data.writers.json import JSONWriter
from ..meta import dump_features, meta_test, sweep_meta_test
from ..meta.decision import check_grid
from ..meta.trainer import check_compatible
from ..network import load_checkpoint
from .base import load_datasets, pipeline_command, report_path, setup

SWEEP_COLUMNS = (
    "threshold",
    "tp",
    "fn",
    "fp",
    "tn",
    "tpr",
    "fpr",
    "recall_macro",
    "precision",
    "closed_accuracy",
)


def _prepare(ctx, config_file):
    run_cfg = setup(ctx, config_file)
    params = load_checkpoint(run_cfg.checkpoint)
    train_split, test_split = load_datasets(run_cfg)
    train_cfg = run_cfg.train_config()
    check_compatible(train_split, params.arch, train_cfg)
    return run_cfg, params, train_split, test_split, train_cfg


def evaluate(ctx, config_file=None, force=False):
    """Meta-tests a checkpoint; writes metrics.json."""
    run_cfg, params, train_split, test_split, train_cfg = _prepare(ctx, config_file)
    writer = JSONWriter(target=report_path(run_cfg, "metrics.json"), echo=run_cfg.echo, force=force)
    result = meta_test(params, train_split, test_split, train_cfg, run_cfg.eval_config())
    writer.write({**result.json, "checkpoint_step": params.step})
    writer.finish()
    metrics = result.average
    click.echo(
        f"tpr {metrics.tpr:.4f} fpr {metrics.fpr:.4f} precision {metrics.precision:.4f} "
        f"recall {metrics.recall_macro:.4f} accuracy {metrics.closed_accuracy:.4f}"
    )


def sweep(ctx, config_file=None, force=False):
    """Evaluates a checkpoint at every sweep_grid threshold; writes sweep.csv."""
    run_cfg, params, train_split, test_split, train_cfg = _prepare(ctx, config_file)
    grid = check_grid(run_cfg.sweep_grid)
    writer = CSVWriter(
        target=report_path(run_cfg, "sweep.csv"), columns=SWEEP_COLUMNS, echo=run_cfg.echo, force=force
    )
    reports = sweep_meta_test(params, train_split, test_split, train_cfg, run_cfg.eval_config(), grid)
    writer.write({**report.json, "threshold": threshold} for threshold, report in zip(grid, reports))
    writer.finish()
    click.echo(f"{len(reports)} thresholds written to {writer.target}")


def features(ctx, config_file=None, force=False):
    """Writes embeddings and p_open of the test samples to features.csv."""
    run_cfg, params, train_split, test_split, train_cfg = _prepare(ctx, config_file)
    columns = ["sample_id", "true_class", "is_open", "p_open"]
    columns += [f"e_{i}" for i in range(params.arch.embed_dim)]
    writer = CSVWriter(
        target=report_path(run_cfg, "features.csv"), columns=columns, echo=run_cfg.echo, force=force
    )
    rows = dump_features(params, train_split, test_split, train_cfg, run_cfg.eval_config())
    writer.write(rows)
    writer.finish()
    click.echo(f"{len(rows)} samples written to {writer.target}")


evaluate = pipeline_command("eval", evaluate)
sweep = pipeline_command("sweep", sweep)
features = pipeline_command("dump-features", features)
