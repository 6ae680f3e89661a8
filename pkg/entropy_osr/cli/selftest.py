import click

from ..errors import NumericError
from ..selftest import run_self_test
from .base import pipeline_command, setup


def self_test(ctx, config_file=None, force=False):
    """Runs the gradient-check suite and prints the max errors."""
    run_cfg = setup(ctx, config_file)
    report = run_self_test(
        run_cfg.arch(),
        run_cfg.train_config(),
        eps=run_cfg.gradcheck_eps,
        tol=run_cfg.gradcheck_tol,
        max_entries=run_cfg.gradcheck_entries,
        seed=run_cfg.seed,
    )
    for result in report.results:
        click.echo(
            f"{result.leaf}: max error {result.max_error:.3e} "
            f"({result.checked} checked, {result.excluded} excluded)"
        )
    click.echo(f"max grad-check error: {report.max_error:.3e}")
    if not report.passed:
        raise NumericError(
            f"Gradient check failed: max error {report.max_error:.3e} exceeds {run_cfg.gradcheck_tol}",
            code="gradcheck",
        )


self_test = pipeline_command("self-test", self_test)
