# tests/test_forms.py
from datetime import timezone

import pytest

from consmps import db
from consmps.errors import ConfigError
from consmps.forms import InstanceHeaderForm, SolverSettingsForm, validate_or_raise
from consmps.models import IterationRecord, SolverRun, utc_now


def settings(**overrides):
    data = {
        'iterations': 10, 'cutoff': 1e-4, 'learning_rate': 0.05, 'samples': 100, 'replace': 10,
        't_init': None, 'max_dim': None, 'time_limit': None,
    }
    data.update(overrides)
    return data


def test_defaults_validate():
    assert SolverSettingsForm(data=settings()).validate()


@pytest.mark.parametrize('field,value', [
    ('iterations', 0),
    ('iterations', None),
    ('cutoff', -1.0),
    ('learning_rate', 0.0),
    ('samples', 0),
    ('t_init', 0.0),
    ('max_dim', 0),
    ('time_limit', -5.0),
])
def test_rejected_settings(field, value):
    form = SolverSettingsForm(data=settings(**{field: value}))
    assert not form.validate()
    assert field in form.errors


def test_replace_cannot_exceed_samples():
    form = SolverSettingsForm(data=settings(samples=20, replace=30))
    assert not form.validate()
    assert "cannot exceed samples (20)" in form.errors['replace'][0]


def test_validate_or_raise_lists_every_field():
    with pytest.raises(ConfigError) as info:
        validate_or_raise(SolverSettingsForm(data=settings(iterations=0, learning_rate=-1.0)), ConfigError)
    assert "iterations:" in str(info.value)
    assert "learning_rate: must be > 0" in str(info.value)


def test_instance_header():
    assert InstanceHeaderForm(data={'type': 'raw', 'N': 3, 'M': 1, 'W': None, 'seed': None}).validate()
    form = InstanceHeaderForm(data={'type': 'other', 'N': 3, 'M': 0, 'W': -1, 'seed': 2})
    assert not form.validate()
    assert set(form.errors) == {'type', 'M', 'W'}


# --- Run store ---

def test_run_history_is_ordered_and_cascades(app):
    run = SolverRun(command='solve', instance_label='test', n_variables=4, seed=1, config_json='{}',
                    best_cost=-3.0, best_bitstring='0110', iterations=2, stop_reason='max_iterations')
    for t in (2, 1):
        run.history.append(IterationRecord(t=t, temperature=1.0 / t, c_min=-t, c_cum_min=-t,
                                           max_bond=2, dict_size=10 * t, wall_ms=0.0))
    db.session.add(run)
    db.session.commit()
    db.session.expire_all()

    stored = db.session.get(SolverRun, run.id)
    assert [r.t for r in stored.history] == [1, 2]
    assert stored.created_at is not None
    assert utc_now().tzinfo is timezone.utc

    db.session.delete(stored)
    db.session.commit()
    assert IterationRecord.query.count() == 0
