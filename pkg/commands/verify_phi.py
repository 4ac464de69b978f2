# commands/verify_phi.py
import logging

import click

from commands import EXIT_NEGATIVE, EXIT_OK, run_command
from models.friction_model import verify_assumptions

logger = logging.getLogger(__name__)


@click.command('verify-phi')
@click.pass_context
def verify_phi(ctx):
    """Check assumptions A1-A4 on the configured regularization."""

    def body(config, writer, mapper):
        params = config.model_params()
        report = verify_assumptions(params.regularization, params)
        writer.write_json('phi_report.json', {'params': params.to_dict(), 'report': report.to_dict()})
        for check in report.checks:
            level = logging.INFO if check.passed else logging.WARNING
            logger.log(level, f"{check.name}: {'pass' if check.passed else 'FAIL'} ({check.detail})")
        return EXIT_OK if report.passed else EXIT_NEGATIVE

    run_command(ctx, 'verify-phi', body)
