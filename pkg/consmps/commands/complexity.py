# consmps/commands/complexity.py
import click
import numpy as np
from flask import Blueprint, current_app

from ..errors import InfeasibleSystem, InstanceError
from ..indexing import charge_complexity
from ..problems import gen_cardinality, gen_facility
from .common import handles_errors, parse_int_list, resolve_seed, write_csv

complexity_bp = Blueprint('complexity', __name__, cli_group=None)

HEADER = ['family', 'N', 'M', 'u', 'delta', 'Q', 'mean', 'stderr']


def cardinality_rows(sizes, deltas=None):
    """Charge complexity of ``l <= sum x <= l + delta`` with ``l = (N - delta) // 2``."""
    rows = []
    for N in sizes:
        for delta in (range(N + 1) if deltas is None else deltas):
            if not 0 <= delta <= N:
                continue
            lower = (N - delta) // 2
            upper = lower + delta
            Q = charge_complexity(gen_cardinality(N, lower, upper))
            current_app.logger.debug(f"[Complexity] cardinality N={N} delta={delta}: Q={Q}")
            rows.append(['cardinality', N, 1, upper, delta, Q, float(Q), 0.0])
    return rows


def facility_rows(sizes, row_counts, upper, repeats, seed):
    """Charge complexity over ``repeats`` random matrices per (N, M); Q is the maximum."""
    rows = []
    for N in sizes:
        for M in row_counts:
            values = []
            for r in range(repeats):
                try:
                    values.append(charge_complexity(gen_facility(N, M, upper, seed + r).system))
                except InfeasibleSystem as e:
                    current_app.logger.warning(f"[Complexity] facility N={N} M={M} seed={seed + r}: {e}")
            if not values:
                continue
            arr = np.asarray(values, dtype=float)
            stderr = float(arr.std(ddof=1) / np.sqrt(len(arr))) if len(arr) > 1 else 0.0
            current_app.logger.debug(f"[Complexity] facility N={N} M={M}: Q values {values}")
            rows.append(['facility', N, M, upper, upper - 2, int(arr.max()), float(arr.mean()), stderr])
    return rows


@complexity_bp.cli.command('complexity')
@click.option('--family', type=click.Choice(['cardinality', 'facility']), default='cardinality', show_default=True)
@click.option('--sizes', default='12,24,36,48,60', show_default=True, help='Comma-separated N values.')
@click.option('--deltas', help='Comma-separated ranges u - l (cardinality; default 0..N).')
@click.option('--rows', 'row_counts', default='2,3,4', show_default=True, help='Comma-separated M values (facility).')
@click.option('--upper', type=int, default=2, show_default=True, help='Upper bound u (facility).')
@click.option('--repeats', type=int, default=5, show_default=True, help='Random matrices per (N, M).')
@click.option('--seed', type=int, help='First seed of the facility repeats; derived when omitted.')
@click.option('--out', type=click.Path(dir_okay=False), help='CSV destination (default: stdout).')
@handles_errors
def complexity(family, sizes, deltas, row_counts, upper, repeats, seed, out):
    """Sweep charge complexity over instance families."""
    seed = resolve_seed(seed)
    sizes = parse_int_list(sizes, 'sizes')
    if repeats < 1:
        raise InstanceError(f"--repeats must be >= 1, got {repeats}")
    if family == 'cardinality':
        rows = cardinality_rows(sizes, parse_int_list(deltas, 'deltas'))
    else:
        rows = facility_rows(sizes, parse_int_list(row_counts, 'rows'), upper, repeats, seed)
    click.echo(f"seed={seed}", err=out is None)
    write_csv(HEADER, rows, out)
    current_app.logger.info(f"[Complexity] {family}: {len(rows)} rows")
