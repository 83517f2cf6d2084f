# consmps/commands/common.py
import csv
import functools
import io
import json

import click
import numpy as np
from flask import current_app

from .. import db
from ..errors import ConfigError, ConsMPSError, InstanceError
from ..forms import SolverSettingsForm, validate_or_raise
from ..models import IterationRecord, SolverRun
from ..optimizer import OptimizerConfig
from ..problems import COSTS, FAMILIES, Instance, load_instance

HISTORY_HEADER = ['t', 'T', 'c_min', 'c_cum_min', 'max_bond', 'dict_size', 'wall_ms']


def handles_errors(func):
    """Map library errors onto `error: <message>` and the error's exit code."""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except click.ClickException:
            raise
        except ConsMPSError as e:
            current_app.logger.error(f"[{func.__name__}] {type(e).__name__}: {e}")
            click.echo(f"error: {e}", err=True)
            click.get_current_context().exit(e.exit_code)
        except Exception as e:
            current_app.logger.error(f"[{func.__name__}] unexpected failure: {e}", exc_info=True)
            click.echo(f"error: {e}", err=True)
            click.get_current_context().exit(1)
    return wrapper


# --- Option groups ---

def instance_options(func):
    options = [
        click.option('--instance', 'instance_path', type=click.Path(dir_okay=False),
                     help='Instance file (JSON).'),
        click.option('--family', type=click.Choice(sorted(FAMILIES)),
                     help='Generate the instance from a named family instead of a file.'),
        click.option('--size', '-n', type=int, help='Number of variables N for --family.'),
        click.option('--rows', type=int, help='Constraint rows M (facility family).'),
        click.option('--lower', type=int, help='Lower bound l (cardinality family).'),
        click.option('--upper', type=int, help='Upper bound u (cardinality and facility families).'),
        click.option('--seed', type=int, help='Seed for generators and the solver; derived when omitted.'),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def solver_options(func):
    options = [
        click.option('--iters', type=int, help='Iterations t_max.'),
        click.option('--cutoff', type=float, help='Discarded-weight fraction per truncation.'),
        click.option('--lr', type=float, help='Learning rate.'),
        click.option('--samples', type=int, help='Training-set size |T|.'),
        click.option('--tinit', type=str, help="Initial temperature, or 'auto'."),
        click.option('--replace', type=int, help='Samples replaced on reset.'),
        click.option('--max-bond', type=int, help='Cap on the kept bond dimension.'),
        click.option('--time-limit', type=float, help='Wall-clock limit in seconds, checked between iterations.'),
        click.option('--timings', is_flag=True, help='Write measured wall_ms instead of 0.'),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def resolve_seed(seed):
    if seed is not None:
        return int(seed)
    return int(np.random.SeedSequence().entropy % 2**32)


def build_instance(instance_path, family, size, rows, lower, upper, seed) -> Instance:
    if instance_path and family:
        raise InstanceError("use either --instance or --family, not both")
    if instance_path:
        return load_instance(instance_path)
    if not family:
        raise InstanceError("an instance is required: pass --instance PATH or --family NAME")
    if size is None:
        raise InstanceError(f"--family {family} needs --size")
    return FAMILIES[family](size, seed=seed, lower=lower, upper=upper, rows=rows)


def default_cost_name(instance: Instance) -> str:
    return 'qkp' if instance.qkp is not None else 'zero'


def parse_tinit(value, instance: Instance):
    """``None`` means automatic; qkp instances default to ``2.5 N``."""
    if value is None:
        return 2.5 * instance.N if instance.qkp is not None else None
    if str(value).strip().lower() == 'auto':
        return None
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"--tinit must be a number or 'auto', got {value!r}") from None


def optimizer_config(seed, t_init, iters=None, cutoff=None, lr=None, samples=None,
                     replace=None, max_bond=None, time_limit=None) -> OptimizerConfig:
    """Merge solver flags over the configured defaults and validate them."""
    cfg = current_app.config
    samples = cfg['SOLVER_SAMPLES'] if samples is None else samples
    if replace is None:
        replace = min(cfg['SOLVER_REPLACE'], samples) if samples and samples > 0 else cfg['SOLVER_REPLACE']
    settings = {
        'iterations': cfg['SOLVER_ITERATIONS'] if iters is None else iters,
        'cutoff': cfg['SOLVER_CUTOFF'] if cutoff is None else cutoff,
        'learning_rate': cfg['SOLVER_LEARNING_RATE'] if lr is None else lr,
        'samples': samples,
        'replace': replace,
        't_init': t_init,
        'max_dim': cfg['SOLVER_MAX_BOND'] if max_bond is None else max_bond,
        'time_limit': time_limit,
    }
    validate_or_raise(SolverSettingsForm(data=settings), ConfigError)
    return OptimizerConfig(
        t_max=settings['iterations'], cutoff=settings['cutoff'], learning_rate=settings['learning_rate'],
        n_samples=settings['samples'], t_init=settings['t_init'], replace_count=settings['replace'],
        seed=seed, max_dim=settings['max_dim'], time_limit=settings['time_limit'],
    )


def config_dict(opt: OptimizerConfig, **extra) -> dict:
    data = {
        'iters': opt.t_max, 'cutoff': opt.cutoff, 'lr': opt.learning_rate, 'samples': opt.n_samples,
        'tinit': 'auto' if opt.t_init is None else opt.t_init, 'replace': opt.replace_count,
        'max_bond': opt.max_dim, 'time_limit': opt.time_limit, 'seed': opt.seed,
    }
    data.update(extra)
    return data


def echo_config(seed, settings: dict, err=False):
    click.echo(f"seed={seed}", err=err)
    click.echo("config=" + json.dumps(settings, sort_keys=True), err=err)


# --- CSV output ---

def format_value(value):
    if value is None:
        return ''
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (float, np.floating)):
        return format(float(value), '.17g')
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def write_csv(header, rows, out=None):
    """Header plus rows, `\\n` line endings, floats with 17 significant digits."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    text = buf.getvalue()
    if out:
        with open(out, 'w', encoding='utf-8', newline='') as fh:
            fh.write(text)
        current_app.logger.info(f"[CSV] wrote {len(rows)} rows to {out}")
    else:
        click.echo(text, nl=False)


def history_rows(history, timings=False):
    return [[r.t, r.temperature, r.c_min, r.c_cum_min, r.max_bond, r.dict_size,
             r.wall_ms if timings else 0] for r in history]


def bitstring(x) -> str:
    return ''.join(str(int(v)) for v in x)


# --- Run store ---

def record_run(command, label, n_variables, seed, settings: dict, result):
    """Persist a finished run with its history; returns the run id or None."""
    if not current_app.config.get('STORE_RUNS', False):
        return None
    try:
        run = SolverRun(
            command=command, instance_label=label, n_variables=n_variables, seed=seed,
            config_json=json.dumps(settings, sort_keys=True), best_cost=float(result.best_cost),
            best_bitstring=bitstring(result.best_x), iterations=result.iterations,
            stop_reason=result.stop_reason,
        )
        for r in result.history:
            run.history.append(IterationRecord(
                t=r.t, temperature=r.temperature, c_min=r.c_min, c_cum_min=r.c_cum_min,
                max_bond=r.max_bond, dict_size=r.dict_size, wall_ms=r.wall_ms,
            ))
        db.session.add(run)
        db.session.commit()
        current_app.logger.info(f"[Runs] stored {command} run {run.id} ({result.iterations} iterations)")
        return run.id
    except Exception as e:
        db.session.rollback()
        current_app.logger.error(f"Could not store {command} run: {e}", exc_info=True)
        return None


def cost_names():
    return sorted(COSTS)


def parse_int_list(text, name):
    if text is None:
        return None
    try:
        values = [int(v) for v in text.replace(' ', '').split(',') if v]
    except ValueError:
        raise InstanceError(f"--{name} expects comma-separated integers, got {text!r}") from None
    if not values:
        raise InstanceError(f"--{name} is empty")
    return values
