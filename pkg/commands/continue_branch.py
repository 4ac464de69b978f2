# commands/continue_branch.py
import logging

import click

from commands import EXIT_OK, run_command
from commands.cycles import BRANCH_HEADER
from models.errors import BranchLostError
from models.stroboscopic_analysis import EventKind, continue_branch, seed_on_manifold
from utils.svg_utils import SvgPlot

logger = logging.getLogger(__name__)

EVENT_COLORS = {EventKind.FOLD: '#d62728', EventKind.PERIOD_DOUBLING: '#2ca02c'}


def bifurcation_svg(diagram):
    plot = SvgPlot(title=f"symmetric cycles, eps={diagram.eps:g}", xlabel='xi', ylabel='max y')
    points = diagram.branch
    plot.polyline([p.xi for p in points], [p.max_y for p in points], color='#1f77b4', label='branch')
    for event in diagram.events:
        nearest = min(points, key=lambda p: abs(p.xi - event.xi))
        plot.marker(event.xi, nearest.max_y, color=EVENT_COLORS[event.kind],
                    label=f"{event.kind.value} {event.xi:.4f}")
    return plot.render()


@click.command('continue')
@click.pass_context
def continue_cmd(ctx):
    """Continue a symmetric limit cycle in xi and detect folds and period doublings."""

    def body(config, writer, mapper):
        theta_star = config['CONTINUE_THETA_STAR']
        params = config.model_params(xi=config['CONTINUE_XI_START'])
        seed = seed_on_manifold(params, theta_star, config['CONTINUE_SEED_Y2'])
        diagram = continue_branch(
            params, theta_star, (config['CONTINUE_XI_START'], config['CONTINUE_XI_STOP']), seed,
            step=config['CONTINUE_STEP'], min_step=config['CONTINUE_MIN_STEP'],
            max_points=config['CONTINUE_MAX_POINTS'], tol=config['TOL_NEWTON'], tols=config.tols)
        writer.write_csv('branch.csv', BRANCH_HEADER, diagram.to_rows())
        writer.write_json('events.json', diagram.to_dict())
        writer.write_text('bifurcation.svg', bifurcation_svg(diagram))
        if diagram.status == 'branch-lost':
            raise BranchLostError(f"continuation stopped after {len(diagram.branch)} points")
        return EXIT_OK

    run_command(ctx, 'continue', body)
