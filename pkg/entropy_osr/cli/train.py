import json

import click

from ..data.writers import check_overwrite
from ..data.writers.csv import CSVWriter
from ..data.writers.json import JSONWriter
from ..meta import StatsKeepingTrainingCallback, ablate, meta_train, training_split
from ..network import save_checkpoint
from .base import load_datasets, pipeline_command, report_path, setup

LOSS_CURVE_COLUMNS = ("episode", "meta_ce", "entropy_dist", "open_bce", "total", "lr")


def train(ctx, config_file=None, force=False):
    """Meta-trains the network; writes the checkpoint and loss_curve.csv."""
    run_cfg = setup(ctx, config_file)
    check_overwrite(run_cfg.checkpoint, force)
    writer = CSVWriter(
        target=report_path(run_cfg, "loss_curve.csv"),
        columns=LOSS_CURVE_COLUMNS,
        echo=run_cfg.echo,
        force=force,
    )
    train_split, _ = load_datasets(run_cfg)
    callback = StatsKeepingTrainingCallback()
    result = meta_train(
        training_split(train_split, run_cfg.eval_config()),
        run_cfg.train_config(),
        run_cfg.arch(),
        callback,
    )
    writer.write(breakdown.json for breakdown in result.curve)
    writer.finish()
    save_checkpoint(result.params, run_cfg.checkpoint, force=force)
    click.echo(callback.stats())


def ablation(ctx, config_file=None, force=False):
    """Trains and meta-tests the full loss and its ablations; writes ablation.json."""
    run_cfg = setup(ctx, config_file)
    writer = JSONWriter(target=report_path(run_cfg, "ablation.json"), echo=run_cfg.echo, force=force)
    train_split, test_split = load_datasets(run_cfg)
    result = ablate(
        train_split, test_split, run_cfg.train_config(), run_cfg.eval_config(), run_cfg.arch()
    )
    writer.write(result.json)
    writer.finish()
    click.echo(json.dumps({name: result.fpr(name) for name in result.results}, sort_keys=True))


train = pipeline_command("train", train)
ablation = pipeline_command("ablate", ablation)
