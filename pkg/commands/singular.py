# commands/singular.py
import logging

import click

from commands import EXIT_OK, run_command
from models.errors import GeometryError, NumericalError
from models.singular_geometry import (SEED_DEFECT_TOL, Side, canard_geometry, compute_faux_canard, folded_singularities,
                                      gamma_plus_meets_jump_image_at_infinity, intersections_gamma_plus_image,
                                      jump_image_curve, jump_set_J, seed_defect, theta_minus,
                                      theta_upsilon, upsilon_arc, upsilon_section_curve, xi_dn, y2_minus)
from utils.svg_utils import SvgPlot

logger = logging.getLogger(__name__)

CURVE_COLORS = {
    'gamma_minus': '#1f77b4', 'gamma_plus': '#1f77b4',
    'gamma_minus_tilde': '#ff7f0e', 'gamma_plus_tilde': '#ff7f0e',
    'G_image': '#2ca02c', 'L_image': '#9467bd', 'J_image': '#8c564b',
    'faux_canard': '#7f7f7f', 'upsilon_section': '#e377c2',
}


def phase_portrait(params, curves, singularities, crossings):
    plot = SvgPlot(title=f"singular geometry, xi={params.xi:g}", xlabel='theta', ylabel='y2')
    for curve in curves:
        plot.polyline(curve.theta, curve.y2, color=CURVE_COLORS.get(curve.provenance), label=curve.provenance)
    lo = min(float(c.theta.min()) for c in curves)
    hi = max(float(c.theta.max()) for c in curves)
    for level in (-params.delta, params.delta):
        plot.polyline([lo, hi], [level, level], color='black', dashed=True)
    for z in singularities:
        shape = 'square' if z.is_saddle else 'circle'
        plot.marker(z.location.theta, z.location.y2, color='black', label=z.kind.value, shape=shape)
    for c in crossings:
        plot.marker(c.point.theta, c.point.y2, color='#d62728', label=f"crossing ({c.mechanism})")
    plot.ylim = (-4.0 * params.delta, 2.5 * params.delta)
    return plot.render()


@click.command('singular')
@click.pass_context
def singular(ctx):
    """Folded singularities, canards, image curves, jump sets and the section."""

    def body(config, writer, mapper):
        params = config.model_params()
        singularities = folded_singularities(params)
        geometry = canard_geometry(params, extent=config['SINGULAR_EXTENT'])
        crossings = intersections_gamma_plus_image(params, geometry)
        faux_a, faux_r = compute_faux_canard(params, seed_offset=config['SINGULAR_SEED_OFFSET'])
        curves = geometry.curves() + [faux_a, faux_r, jump_image_curve(params, Side.MINUS),
                                      jump_image_curve(params, Side.PLUS), upsilon_section_curve(params)]
        summary = {
            'params': params.to_dict(),
            'theta_minus': theta_minus(params),
            'y2_minus': y2_minus(params),
            'J_minus': jump_set_J(params, Side.MINUS).to_dict(),
            'J_plus': jump_set_J(params, Side.PLUS).to_dict(),
            'upsilon_arc': upsilon_arc(params).to_dict(),
            'folded_singularities': [z.to_dict() for z in singularities],
            'crossings': [c.to_dict() for c in crossings],
            'gamma_plus_meets_jump_image_at_infinity': gamma_plus_meets_jump_image_at_infinity(params),
        }
        summary['seed_defect'] = seed_defect(params, extent=config['SINGULAR_EXTENT'],
                                             seed_offset=config['SINGULAR_SEED_OFFSET'])
        if summary['seed_defect'] > SEED_DEFECT_TOL:
            logger.warning(f"canard depends on the seed offset: defect {summary['seed_defect']:.3g}")
        try:
            summary['xi_dn'] = xi_dn(params)
        except (GeometryError, NumericalError) as e:
            summary['xi_dn'] = None
            logger.warning(f"xi_dn unavailable: {e}")
        try:
            summary['theta_upsilon'] = theta_upsilon(params, seed_offset=config['SINGULAR_SEED_OFFSET'])
        except GeometryError as e:
            summary['theta_upsilon'] = None
            logger.warning(f"theta_upsilon undefined at xi={params.xi}: {e}")
        writer.write_json('singular.json', summary)

        rows = [row for curve in curves for row in curve.to_rows()]
        writer.write_csv('curves.csv', ['provenance', 'arclength', 'y2', 'theta'], rows)

        if config['SINGULAR_XI_VALUES']:
            grid = []
            for xi in config['SINGULAR_XI_VALUES']:
                p = params.with_(xi=xi)
                try:
                    value = theta_upsilon(p, seed_offset=config['SINGULAR_SEED_OFFSET'])
                except (GeometryError, NumericalError) as e:
                    logger.warning(f"skipping xi={xi}: {e}")
                    value = ''
                grid.append((xi, value, theta_minus(p)))
            writer.write_csv('theta_upsilon.csv', ['xi', 'theta_upsilon', 'theta_minus'], grid)

        writer.write_text('phase_portrait.svg', phase_portrait(params, curves, singularities, crossings))
        logger.info(f"singular geometry at xi={params.xi}: {len(crossings)} crossings")
        return EXIT_OK

    run_command(ctx, 'singular', body)
