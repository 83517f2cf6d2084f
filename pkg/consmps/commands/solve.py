# consmps/commands/solve.py
import click
from flask import Blueprint, current_app

from ..optimizer import solve as run_solver
from ..problems import COSTS, make_cost
from .common import (
    HISTORY_HEADER, bitstring, build_instance, config_dict, default_cost_name, echo_config,
    handles_errors, history_rows, instance_options, optimizer_config, parse_tinit, record_run,
    resolve_seed, solver_options, write_csv,
)

solve_bp = Blueprint('solve', __name__, cli_group=None)


@solve_bp.cli.command('solve')
@instance_options
@solver_options
@click.option('--cost', 'cost_name', type=click.Choice(sorted(COSTS)),
              help='Objective (default: qkp for qkp instances, zero otherwise).')
@click.option('--out', type=click.Path(dir_okay=False), help='History CSV destination (default: stdout).')
@handles_errors
def solve(instance_path, family, size, rows, lower, upper, seed, iters, cutoff, lr, samples, tinit,
          replace, max_bond, time_limit, timings, cost_name, out):
    """Minimise a cost over the feasible bitstrings with the annealed MPS optimizer."""
    seed = resolve_seed(seed)
    instance = build_instance(instance_path, family, size, rows, lower, upper, seed)
    cost_name = cost_name or default_cost_name(instance)
    cost = make_cost(cost_name, instance)
    opt = optimizer_config(seed, parse_tinit(tinit, instance), iters, cutoff, lr, samples,
                           replace, max_bond, time_limit)
    settings = config_dict(opt, cost=cost_name, instance=instance.label or instance.kind)
    to_stderr = out is None
    echo_config(seed, settings, err=to_stderr)

    current_app.logger.info(f"[Solve] {settings['instance']}: N={instance.N}, cost={cost_name}")
    result = run_solver(cost, instance.system, opt)
    record_run('solve', settings['instance'], instance.N, seed, settings, result)

    write_csv(HISTORY_HEADER, history_rows(result.history, timings), out)
    click.echo(f"best_cost={result.best_cost:.17g}", err=to_stderr)
    click.echo(f"best_x={bitstring(result.best_x)}", err=to_stderr)
    click.echo(f"iterations={result.iterations} stop_reason={result.stop_reason}", err=to_stderr)
