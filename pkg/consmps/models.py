# consmps/models.py
from datetime import datetime, timezone
from . import db


def utc_now():
    return datetime.now(timezone.utc)


class SolverRun(db.Model):
    __tablename__ = 'solver_runs'
    id = db.Column(db.Integer, primary_key=True)
    command = db.Column(db.String, nullable=False, index=True)  # solve or bench
    instance_label = db.Column(db.String)
    n_variables = db.Column(db.Integer, nullable=False)
    seed = db.Column(db.Integer, nullable=False)
    config_json = db.Column(db.Text, nullable=False)
    best_cost = db.Column(db.Float)
    best_bitstring = db.Column(db.String)
    iterations = db.Column(db.Integer, nullable=False, default=0)
    stop_reason = db.Column(db.String)
    created_at = db.Column(db.DateTime, default=utc_now, index=True)

    # Relationships
    history = db.relationship('IterationRecord', backref='run', lazy=True,
                              cascade="all, delete-orphan", order_by='IterationRecord.t')


class IterationRecord(db.Model):
    __tablename__ = 'iteration_records'
    id = db.Column(db.Integer, primary_key=True)
    run_id = db.Column(db.Integer, db.ForeignKey('solver_runs.id', ondelete='CASCADE'), nullable=False, index=True)
    t = db.Column(db.Integer, nullable=False)
    temperature = db.Column(db.Float, nullable=False)
    c_min = db.Column(db.Float, nullable=False)
    c_cum_min = db.Column(db.Float, nullable=False)
    max_bond = db.Column(db.Integer, nullable=False)
    dict_size = db.Column(db.Integer, nullable=False)
    wall_ms = db.Column(db.Float, nullable=False, default=0.0)
