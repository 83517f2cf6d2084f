# consmps/commands/runs.py
import click
from flask import Blueprint, current_app

from .. import db
from ..errors import InstanceError
from ..models import SolverRun
from .common import HISTORY_HEADER, handles_errors, write_csv

runs_bp = Blueprint('runs', __name__, cli_group=None)


@runs_bp.cli.command('runs')
@click.option('--limit', type=int, default=20, show_default=True, help='Most recent runs to list.')
@click.option('--show', 'run_id', type=int, help='Print the iteration history of one run as CSV.')
@click.option('--out', type=click.Path(dir_okay=False), help='CSV destination (default: stdout).')
@handles_errors
def runs(limit, run_id, out):
    """List stored solver runs."""
    if run_id is not None:
        run = db.session.get(SolverRun, run_id)
        if run is None:
            raise InstanceError(f"run {run_id} not found")
        rows = [[r.t, r.temperature, r.c_min, r.c_cum_min, r.max_bond, r.dict_size, r.wall_ms]
                for r in run.history]
        write_csv(HISTORY_HEADER, rows, out)
        return

    stored = SolverRun.query.order_by(SolverRun.created_at.desc(), SolverRun.id.desc()).limit(limit).all()
    current_app.logger.debug(f"[Runs] listing {len(stored)} runs")
    rows = [[r.id, r.command, r.instance_label, r.n_variables, r.seed, r.best_cost, r.best_bitstring,
             r.iterations, r.stop_reason, r.created_at.isoformat(timespec='seconds') if r.created_at else None]
            for r in stored]
    write_csv(['id', 'command', 'instance', 'N', 'seed', 'best_cost', 'best_x', 'iterations',
               'stop_reason', 'created_at'], rows, out)
