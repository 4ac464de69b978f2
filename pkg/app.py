# app.py
import click

from commands import RunContext
from commands.continue_branch import continue_cmd
from commands.cycles import cycles
from commands.evidence import evidence
from commands.return_map import return_map
from commands.simulate import simulate_cmd
from commands.singular import singular
from commands.thresholds import thresholds
from commands.verify_phi import verify_phi
from extensions import configure_logging


@click.group()
@click.option('--config', 'config_path', type=click.Path(dir_okay=False), default=None,
              help='KEY=value run configuration file.')
@click.option('--out', 'out_dir', type=click.Path(file_okay=False), default=None,
              help='Output directory (default: STICTION_OUT or ./results).')
@click.option('--threads', type=click.IntRange(min=1), default=None, help='Worker processes for sweeps.')
@click.option('--tol-override', type=click.FloatRange(min=0.0, min_open=True), default=None,
              help='Replace every relative tolerance.')
@click.option('--verbose', is_flag=True, help='Debug logging.')
@click.pass_context
def cli(ctx, config_path, out_dir, threads, tol_override, verbose):
    """Numerical laboratory for the slowly forced stiction oscillator."""
    configure_logging(verbose)
    ctx.obj = RunContext(config_path=config_path, out_dir=out_dir, threads=threads,
                         tol_override=tol_override)


cli.add_command(verify_phi)
cli.add_command(singular)
cli.add_command(thresholds)
cli.add_command(return_map)
cli.add_command(cycles)
cli.add_command(continue_cmd)
cli.add_command(simulate_cmd)
cli.add_command(evidence)

if __name__ == '__main__':
    cli()
