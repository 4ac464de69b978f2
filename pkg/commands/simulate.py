# commands/simulate.py
import logging
import math

import click

from commands import EXIT_OK, run_command
from models.friction_model import PhaseState
from models.stroboscopic_analysis import count_slip_excursions, simulate, slips_per_period
from utils.svg_utils import SvgPlot

logger = logging.getLogger(__name__)


@click.command('simulate')
@click.pass_context
def simulate_cmd(ctx):
    """Integrate the full system and tag stick / slip phases."""

    def body(config, writer, mapper):
        params = config.model_params()
        s0 = PhaseState(config['SIMULATE_X0'], config['SIMULATE_Y0'], config['SIMULATE_THETA0'])
        period = 2.0 * math.pi / params.omega
        t_end = config['SIMULATE_PERIODS'] * period
        threshold = config['SIMULATE_THRESHOLD'] or None
        result = simulate(params, s0, (0.0, t_end), threshold=threshold,
                          dt_out=config['SIMULATE_DT_OUT'], tols=config.tols)
        writer.write_csv('trajectory.csv', ['t', 'x', 'y', 'theta', 'phase_tag'], result.rows())
        tail = min(2, int(config['SIMULATE_PERIODS']) - 1) or 1
        summary = {
            'period': period,
            'threshold': result.threshold,
            'slip_excursions': count_slip_excursions(result),
            'slips_per_period': slips_per_period(result, params, periods=tail),
            'stats': result.stats,
        }
        writer.write_json('simulation.json', summary)

        mask = result.t >= t_end - tail * period
        plot = SvgPlot(title=f"velocity over the last {tail} period(s)", xlabel='t', ylabel='y')
        plot.polyline(result.t[mask], result.y[mask], color='#1f77b4')
        plot.hline(result.threshold)
        plot.hline(-result.threshold)
        writer.write_text('trajectory.svg', plot.render())
        logger.info(f"{summary['slips_per_period']:g} slip excursions per period")
        return EXIT_OK

    run_command(ctx, 'simulate', body)
