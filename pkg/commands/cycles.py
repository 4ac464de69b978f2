# commands/cycles.py
import logging
import math

import click
import numpy as np

from commands import EXIT_OK, run_command
from models.errors import GeometryError, NumericalError
from models.singular_return_map import (find_R0_fixed_points, singular_cycle_from_fixed_point,
                                        singular_cycles_from_canard)
from models.stroboscopic_analysis import (find_limit_cycle, phase_tags, seed_on_manifold,
                                          seeds_from_singular_cycles, symmetry_defect)
from utils.svg_utils import COLORS, SvgPlot

logger = logging.getLogger(__name__)

BRANCH_HEADER = ['xi', 'x', 'y2', 'max_y', 'mult1_re', 'mult1_im', 'mult2_re', 'mult2_im', 'class']


def singular_cycles(params, theta_star, mapper=map):
    cycles = []
    for fp in find_R0_fixed_points(params, theta_star, mapper=mapper):
        try:
            cycles.append(singular_cycle_from_fixed_point(params, theta_star, fp.y2))
        except GeometryError as e:
            logger.warning(f"no singular cycle through y2={fp.y2:.6f}: {e}")
    if params.has_folded_singularities:
        try:
            cycles.extend(singular_cycles_from_canard(params))
        except (GeometryError, NumericalError) as e:
            logger.warning(f"canard cycles unavailable: {e}")
    return cycles


def limit_cycles(params, theta_star, seeds, tols, tol):
    found = []
    for y2 in seeds:
        try:
            cycle = find_limit_cycle(params, theta_star, seed_on_manifold(params, theta_star, y2),
                                     tol=tol, tols=tols)
        except NumericalError as e:
            logger.warning(f"Newton from y2={y2:.6f} failed: {e}")
            continue
        if all(np.max(np.abs(cycle.point - c.point)) > 1e-6 for c in found):
            found.append(cycle)
    return found


@click.command('cycles')
@click.pass_context
def cycles(ctx):
    """Singular cycles at eps = 0 and, for eps > 0, the symmetric limit cycles they seed."""

    def body(config, writer, mapper):
        params = config.model_params()
        theta_star = config['CYCLES_THETA_STAR']
        singular = singular_cycles(params, theta_star, mapper)
        writer.write_json('singular_cycles.json', [c.to_dict() for c in singular])
        rows = [(k,) + row for k, c in enumerate(singular) for row in c.to_rows()]
        writer.write_csv('singular_cycles.csv', ['cycle', 'half', 'sheet', 'y2', 'theta'], rows)
        logger.info(f"{len(singular)} singular cycles: {[c.classification.value for c in singular]}")

        if params.eps > 0:
            seeds = seeds_from_singular_cycles(params, theta_star, singular)
            seeds.extend(config['CYCLES_SEEDS_Y2'])
            found = limit_cycles(params, theta_star, seeds, config.tols, config['TOL_NEWTON'])
            writer.write_csv('limit_cycles.csv', BRANCH_HEADER,
                             [c.summary() for c in found])
            plot = SvgPlot(title=f"limit cycles, xi={params.xi:g}, eps={params.eps:g}", xlabel='x', ylabel='y')
            for k, c in enumerate(found):
                traj = c.trajectory
                tags = phase_tags(traj['y'], math.sqrt(params.eps))
                writer.write_csv(f'cycle_{k}_trajectory.csv', ['t', 'x', 'y', 'theta', 'phase_tag'],
                                 zip(traj['t'], traj['x'], traj['y'], traj['theta'], tags))
                plot.polyline(traj['x'], traj['y'], color=COLORS[k % len(COLORS)],
                              label=f"{k}: {c.classification.value}")
                logger.info(f"cycle {k}: {c.classification.value}, |multipliers|="
                            f"{np.round(np.abs(c.multipliers), 6)}, symmetry defect {symmetry_defect(c):.2e}")
            writer.write_text('limit_cycles.svg', plot.render())
        return EXIT_OK

    run_command(ctx, 'cycles', body)
