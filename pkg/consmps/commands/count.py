# consmps/commands/count.py
import click
from flask import Blueprint, current_app

from ..cmps import constraints_to_mps, count_solutions
from ..errors import VerificationFailed
from ..problems import brute_force_count
from .common import build_instance, handles_errors, instance_options, resolve_seed

count_bp = Blueprint('count', __name__, cli_group=None)


@count_bp.cli.command('count')
@instance_options
@click.option('--flux', 'flux_site', type=int, help='Site carrying the flux tensor (default: last site).')
@click.option('--verify', is_flag=True, help='Cross-check against exhaustive enumeration (small N only).')
@handles_errors
def count(instance_path, family, size, rows, lower, upper, seed, flux_site, verify):
    """Count feasible bitstrings by contracting the uniform constrained MPS."""
    seed = resolve_seed(seed)
    instance = build_instance(instance_path, family, size, rows, lower, upper, seed)
    total = int(round(count_solutions(constraints_to_mps(instance.system, flux_site))))
    if total >= 2**53:
        current_app.logger.warning(f"[Count] {total} exceeds 2**53; the last digits may be inexact")
    click.echo(f"seed={seed}")
    click.echo(f"count={total}")

    if not verify:
        return
    limit = current_app.config['VERIFY_MAX_N']
    if instance.N > limit:
        current_app.logger.warning(f"[Count] --verify skipped: N={instance.N} exceeds {limit}")
        click.echo("verified=skipped")
        return
    expected = brute_force_count(instance.system, max_n=limit)
    if expected != total:
        raise VerificationFailed(f"contraction gives {total}, enumeration gives {expected}")
    click.echo("verified=true")
