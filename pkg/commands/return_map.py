# commands/return_map.py
import logging

import click
import numpy as np

from commands import EXIT_OK, run_command
from models.errors import GeometryError
from models.singular_return_map import R0_continuity_intervals, find_R0_fixed_points, stick_slip_interval
from models.stroboscopic_analysis import half_map_convergence
from utils.svg_utils import SvgPlot

logger = logging.getLogger(__name__)


@click.command('return-map')
@click.pass_context
def return_map(ctx):
    """Graph, continuity intervals and fixed points of the singular half-map R0."""

    def body(config, writer, mapper):
        params = config.model_params()
        theta_star = config['RETURN_MAP_THETA_STAR']
        n = max(2, config['RETURN_MAP_POINTS'])
        intervals = R0_continuity_intervals(params, theta_star, n_scan=n, mapper=mapper)
        rows = []
        summary = []
        for k, run in enumerate(intervals):
            slope = np.gradient(run[:, 1], run[:, 0])
            rows.extend((k, y, v, s) for (y, v), s in zip(run, slope))
            summary.append({'interval': k, 'lo': run[0, 0], 'hi': run[-1, 0],
                            'slope_min': float(slope.min()), 'slope_max': float(slope.max())})
        writer.write_csv('R0_graph.csv', ['interval', 'y2', 'R0', 'slope'], rows)

        fixed = find_R0_fixed_points(params, theta_star, n_scan=n, mapper=mapper)
        result = {'theta_star': theta_star, 'intervals': summary,
                  'fixed_points': [fp._asdict() for fp in fixed]}
        if params.has_folded_singularities:
            try:
                result['stick_slip_interval'] = list(stick_slip_interval(params, theta_star))
            except GeometryError as e:
                logger.warning(f"stick-slip interval unavailable: {e}")

        if config['RETURN_MAP_CONVERGENCE_EPS']:
            points = config['RETURN_MAP_CONVERGENCE_Y2'] or tuple(
                np.linspace(-0.5, 0.5, 5) * params.delta)
            result['convergence'] = half_map_convergence(
                params, theta_star, points, config['RETURN_MAP_CONVERGENCE_EPS'])
        writer.write_json('R0_summary.json', result)

        plot = SvgPlot(title=f"R0 on theta*={theta_star:g}, xi={params.xi:g}", xlabel='y2', ylabel='R0(y2)')
        d = params.delta
        plot.polyline([-d, d], [-d, d], color='#999999', dashed=True)
        for run in intervals:
            plot.polyline(run[:, 0], run[:, 1], color='#1f77b4')
        for fp in fixed:
            plot.marker(fp.y2, fp.y2, color='#d62728', label=f"fixed point, slope {fp.slope:.3f}")
        writer.write_text('R0_graph.svg', plot.render())
        logger.info(f"R0: {len(intervals)} continuity intervals, {len(fixed)} fixed points")
        return EXIT_OK

    run_command(ctx, 'return-map', body)
