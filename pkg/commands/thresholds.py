# commands/thresholds.py
import logging

import click

from commands import EXIT_OK, run_command
from models.singular_geometry import find_xi_pd, find_xi_t, theta_upsilon_sweep, xi_dn

logger = logging.getLogger(__name__)


@click.command('thresholds')
@click.pass_context
def thresholds(ctx):
    """xi_pd, xi_t and xi_dn; optionally the mu_d sweep of theta_Upsilon."""

    def body(config, writer, mapper):
        params = config.model_params()
        pd_bracket = (config['THRESHOLDS_PD_LO'], config['THRESHOLDS_PD_HI'])
        t_bracket = (config['THRESHOLDS_T_LO'], config['THRESHOLDS_T_HI'])
        result = {
            'xi_pd': find_xi_pd(params, pd_bracket, tol=config['TOL_THRESHOLD']),
            'xi_t': find_xi_t(params, t_bracket),
            'xi_dn': xi_dn(params),
        }
        logger.info(f"xi_pd={result['xi_pd']:.6f} xi_t={result['xi_t']:.6f} xi_dn={result['xi_dn']:.6f}")
        writer.write_json('thresholds.json', result)

        if config['THRESHOLDS_SWEEP_MU_D']:
            xi_values = config['THRESHOLDS_SWEEP_XI'] or tuple(0.62 + 0.02 * k for k in range(30))
            rows = theta_upsilon_sweep(params, config['THRESHOLDS_SWEEP_MU_D'], xi_values,
                                       pd_bracket=pd_bracket, t_bracket=t_bracket, mapper=mapper)
            curve_rows = [(row.mu_d, xi, '' if value is None else value)
                          for row in rows for xi, value in zip(row.xi_values, row.theta_upsilon)]
            writer.write_csv('theta_upsilon_sweep.csv', ['mu_d', 'xi', 'theta_upsilon'], curve_rows)
            loci = [(row.mu_d, '' if row.xi_pd is None else row.xi_pd, '' if row.xi_t is None else row.xi_t)
                    for row in rows]
            writer.write_csv('threshold_loci.csv', ['mu_d', 'xi_pd', 'xi_t'], loci)
            writer.write_json('sweep_errors.json', {repr(row.mu_d): row.errors for row in rows})
        return EXIT_OK

    run_command(ctx, 'thresholds', body)
