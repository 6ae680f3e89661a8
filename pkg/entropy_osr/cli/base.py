import logging
import sys
from pathlib import Path
from typing import Sequence, Tuple

import click

from ..config import RunConfig, load_run_config
from ..data.readers.manifest import load_dir
from ..data.synthetic import gen_synthetic
from ..data.types import Dataset
from ..data.writers.manifest import MANIFEST_NAME
from ..errors import ErrorReport

log = logging.getLogger("entropy_osr.cli")

LOG_FORMAT = "%(asctime)s %(levelname)s [%(threadName)s] %(name)s %(message)s"

PIPELINE_CONTEXT = {"ignore_unknown_options": True, "allow_extra_args": True}


@click.group()
def entropy_osr():
    """Entropy-aware meta-learning for open-set recognition."""


def as_command(group, name, *args, **command_kwargs):
    args = [group.command(name=name, **command_kwargs), *args]
    actual = args[-1]
    for arg in reversed(args[:-1]):
        actual = arg(actual)
    return actual


def pipeline_command(name, fn, *options):
    """Command taking ``--config FILE``, ``--force`` and free ``--key value`` overrides."""
    return as_command(
        entropy_osr,
        name,
        click.option("--config", "config_file", type=click.Path(dir_okay=False), help="key=value or YAML file"),
        click.option("--force", is_flag=True, help="Overwrite existing outputs"),
        *options,
        click.pass_context,
        fn,
        context_settings=PIPELINE_CONTEXT,
    )


def setup(ctx: click.Context, config_file) -> RunConfig:
    run_cfg = load_run_config(config_file, ctx.args)
    logging.basicConfig(level=run_cfg.log_level, format=LOG_FORMAT)
    log.info("Running %s with %s", ctx.command.name, run_cfg.echo)
    return run_cfg


def load_datasets(run_cfg: RunConfig) -> Tuple[Dataset, Dataset]:
    """``data_dir/train`` and ``data_dir/test`` manifests, or the synthetic dataset."""
    if not run_cfg.data_dir:
        return gen_synthetic(run_cfg.synth_config())
    root = Path(run_cfg.data_dir)
    train = load_dir(root / "train" / MANIFEST_NAME, image_size=run_cfg.image_size, split_tag="train")
    test = load_dir(
        root / "test" / MANIFEST_NAME,
        image_size=run_cfg.image_size,
        split_tag="test",
        class_names=train.class_names,
    )
    return train, test


def report_path(run_cfg: RunConfig, name: str) -> Path:
    return Path(run_cfg.report_dir) / name


def dispatch(argv: Sequence[str] = None) -> int:
    """Runs one command; errors become a single ``ERROR <code>: message`` line on stderr."""
    try:
        ret = entropy_osr.main(args=list(argv) if argv is not None else None, prog_name="entropy-osr", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("ERROR 1: aborted", err=True)
        return 1
    except click.exceptions.ClickException as e:
        click.echo(f"ERROR 2: {' '.join(e.format_message().split())}", err=True)
        return 2
    except Exception as e:
        report = ErrorReport.from_exception(e)
        log.debug("%s", report)
        click.echo(report.line, err=True)
        return report.exit_code
    return ret if isinstance(ret, int) else 0


def run():
    sys.exit(dispatch())
