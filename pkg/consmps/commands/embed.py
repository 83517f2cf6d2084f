# consmps/commands/embed.py
import click
from flask import Blueprint, current_app

from ..cmps import constraints_to_mps, dump_mps
from ..indexing import constraints_to_indices, link_profile, right_indices
from ..qregion import format_qregion
from .common import build_instance, handles_errors, instance_options, resolve_seed, write_csv

embed_bp = Blueprint('embed', __name__, cli_group=None)


def embed_report(instance, flux_site=None):
    """Index families, block counts and charge complexity of the uniform MPS."""
    sys = instance.system
    left = constraints_to_indices(sys)
    right = right_indices(sys)
    mps = constraints_to_mps(sys, flux_site)
    profile = link_profile(sys, left, right)
    return {
        'left': left,
        'right': right,
        'blocks': mps.block_counts(),
        'link_blocks': mps.link_block_counts(),
        'profile': profile,
        'mps': mps,
    }


@embed_bp.cli.command('embed')
@instance_options
@click.option('--flux', 'flux_site', type=int, help='Site carrying the flux tensor (default: last site).')
@click.option('--out', type=click.Path(dir_okay=False), help='Write the index families as CSV.')
@click.option('--save-mps', type=click.Path(dir_okay=False), help='Serialize the uniform MPS to this file.')
@handles_errors
def embed(instance_path, family, size, rows, lower, upper, seed, flux_site, out, save_mps):
    """Build the link indices and the uniform constrained MPS of an instance."""
    seed = resolve_seed(seed)
    instance = build_instance(instance_path, family, size, rows, lower, upper, seed)
    current_app.logger.info(f"[Embed] {instance.label or instance.kind}: N={instance.N} M={instance.system.M}")
    report = embed_report(instance, flux_site)

    click.echo(f"seed={seed}")
    link_blocks = report['link_blocks']
    for name in ('left', 'right'):
        for i, link in enumerate(report[name]):
            click.echo(f"{name} {i} {len(link)} {link_blocks[i]} {' '.join(format_qregion(q) for q in link)}")
    click.echo("blocks " + " ".join(str(b) for b in report['blocks']))
    profile = report['profile']
    click.echo(f"max_qregions_left={max(profile.left)}")
    click.echo(f"max_qregions_right={max(profile.right)}")
    click.echo(f"charge_complexity={profile.charge_complexity}")
    click.echo(f"total_blocks={sum(report['blocks'])}")

    if out:
        csv_rows = [[name, i, len(link), link_blocks[i], ' '.join(format_qregion(q) for q in link)]
                    for name in ('left', 'right') for i, link in enumerate(report[name])]
        write_csv(['family', 'site', 'n_qregions', 'total_blocks', 'qregion_repr'], csv_rows, out)
    if save_mps:
        dump_mps(report['mps'], save_mps)
        current_app.logger.info(f"[Embed] saved uniform MPS to {save_mps}")
