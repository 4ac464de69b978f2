# commands/evidence.py
import logging

import click

from commands import EXIT_OK, run_command
from models.stroboscopic_analysis import horseshoe_evidence

logger = logging.getLogger(__name__)


@click.command('evidence')
@click.pass_context
def evidence(ctx):
    """Horseshoe diagnostics at the configured xi and eps."""

    def body(config, writer, mapper):
        params = config.model_params()
        report = horseshoe_evidence(
            params, n_grid=config['EVIDENCE_GRID'], depths=config['EVIDENCE_DEPTHS'],
            max_iter=config['EVIDENCE_MAX_ITER'], width=config['EVIDENCE_WIDTH'] or None,
            tols=config.tols, mapper=mapper)
        writer.write_json('evidence.json', report.to_dict())
        for name, item in report.items.items():
            if item.ok:
                logger.info(f"{name}: ok")
            else:
                logger.warning(f"{name}: not established ({item.error or item.value})")
        return EXIT_OK

    run_command(ctx, 'evidence', body)
