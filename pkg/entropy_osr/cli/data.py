from pathlib import Path

import click

from ..data.synthetic import gen_synthetic
from ..data.writers.manifest import ManifestWriter
from ..errors import ConfigError
from .base import pipeline_command, setup


def gen_data(ctx, config_file=None, force=False):
    """Writes the synthetic dataset as manifest + PGM layouts under data_dir."""
    run_cfg = setup(ctx, config_file)
    if not run_cfg.data_dir:
        raise ConfigError("gen-data needs --data_dir", code="missing_key", location="data_dir")
    root = Path(run_cfg.data_dir)
    writers = {
        split: ManifestWriter(target=root / split, echo=run_cfg.echo, force=force)
        for split in ("train", "test")
    }
    for dataset in gen_synthetic(run_cfg.synth_config()):
        writer = writers[dataset.split_tag]
        writer.write(dataset)
        writer.finish()
        click.echo(f"{dataset.split_tag}: {len(dataset)} images in {writer.target}")


gen_data = pipeline_command("gen-data", gen_data)
