# consmps/commands/bench.py
import dataclasses
import time
from concurrent.futures import ProcessPoolExecutor

import click
import numpy as np
from flask import Blueprint, current_app

from ..errors import InstanceError, VerificationFailed
from ..optimizer import OptimizerConfig, solve
from ..problems import COSTS, FAMILIES, make_cost
from .common import (
    config_dict, echo_config, handles_errors, optimizer_config, parse_int_list, parse_tinit,
    record_run, resolve_seed, solver_options, write_csv,
)

bench_bp = Blueprint('bench', __name__, cli_group=None)

HEADER = ['row', 'size', 'run', 'seed', 'best_cost', 'mean_best', 'min_best', 'wall_ms']


def run_cell(family, size, run, seed, params, cost_name, opt: OptimizerConfig, t_init_auto_qkp):
    """One (size, run) cell: generate the instance, solve it, re-check feasibility.

    Module level so a process pool can pickle it.
    """
    instance = FAMILIES[family](size, seed=seed, **params)
    if t_init_auto_qkp and instance.qkp is not None:
        opt = dataclasses.replace(opt, t_init=2.5 * size)
    opt = dataclasses.replace(opt, seed=seed)
    started = time.perf_counter()
    result = solve(make_cost(cost_name, instance), instance.system, opt)
    wall_ms = (time.perf_counter() - started) * 1000.0
    if not instance.system.is_feasible(result.best_x):
        raise VerificationFailed(f"size {size} run {run}: reported solution violates the constraints")
    return {
        'size': size, 'run': run, 'seed': seed, 'label': instance.label,
        'result': result, 'wall_ms': wall_ms,
    }


@bench_bp.cli.command('bench')
@click.option('--family', type=click.Choice(sorted(FAMILIES)), default='qkp', show_default=True)
@click.option('--sizes', default='20', show_default=True, help='Comma-separated problem sizes N.')
@click.option('--runs', type=int, default=10, show_default=True, help='Independent instances per size.')
@click.option('--rows', type=int, help='Constraint rows M (facility family).')
@click.option('--lower', type=int, help='Lower bound l (cardinality family).')
@click.option('--upper', type=int, help='Upper bound u (cardinality and facility families).')
@click.option('--workers', type=int, default=1, show_default=True, help='Cells solved in parallel.')
@click.option('--seed', type=int, help='Base seed; run r of every size uses seed + r.')
@solver_options
@click.option('--cost', 'cost_name', type=click.Choice(sorted(COSTS)),
              help='Objective (default: qkp for the qkp family, zero otherwise).')
@click.option('--out', type=click.Path(dir_okay=False), help='CSV destination (default: stdout).')
@handles_errors
def bench(family, sizes, runs, rows, lower, upper, workers, seed, iters, cutoff, lr, samples, tinit,
          replace, max_bond, time_limit, timings, cost_name, out):
    """Solve a batch of generated instances and summarise the best costs."""
    seed = resolve_seed(seed)
    sizes = parse_int_list(sizes, 'sizes')
    if runs < 1 or workers < 1:
        raise InstanceError("--runs and --workers must be >= 1")
    cost_name = cost_name or ('qkp' if family == 'qkp' else 'zero')
    t_init_auto_qkp = tinit is None and family == 'qkp'
    t_init = None if tinit is None else parse_tinit(tinit, None)
    opt = optimizer_config(seed, t_init, iters, cutoff, lr, samples, replace, max_bond, time_limit)
    settings = config_dict(opt, cost=cost_name, family=family, sizes=sizes, runs=runs,
                           tinit="2.5N" if t_init_auto_qkp else ("auto" if opt.t_init is None else opt.t_init))
    to_stderr = out is None
    echo_config(seed, settings, err=to_stderr)

    params = {'rows': rows, 'lower': lower, 'upper': upper}
    cells = [(family, N, r, seed + r, params, cost_name, opt, t_init_auto_qkp) for N in sizes for r in range(runs)]
    current_app.logger.info(f"[Bench] {len(cells)} cells on {workers} worker(s)")
    if workers == 1:
        outcomes = [run_cell(*cell) for cell in cells]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run_cell, *zip(*cells)))
    outcomes.sort(key=lambda o: (o['size'], o['run']))

    csv_rows = []
    for N in sizes:
        group = [o for o in outcomes if o['size'] == N]
        for o in group:
            res = o['result']
            record_run('bench', o['label'], N, o['seed'], dict(settings, seed=o['seed']), res)
            csv_rows.append(['run', N, o['run'], o['seed'], res.best_cost, None, None,
                             o['wall_ms'] if timings else 0])
        best = np.array([o['result'].best_cost for o in group], dtype=float)
        wall = float(np.mean([o['wall_ms'] for o in group])) if timings else 0
        csv_rows.append(['summary', N, None, None, None, float(best.mean()), float(best.min()), wall])
        current_app.logger.info(f"[Bench:{N}] mean best {best.mean():.6g}, min best {best.min():.6g}")
    write_csv(HEADER, csv_rows, out)
