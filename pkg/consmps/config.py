# consmps/config.py
import os
from pathlib import Path

# Define the base directory of the package
basedir = os.path.abspath(os.path.dirname(__file__))


def _env_flag(name, default):
    return os.environ.get(name, str(default)).strip().lower() in ('1', 'true', 'yes', 'on')


class Config:
    """Base configuration class."""

    # --- Run Store Configuration ---
    DATABASE_FILENAME = 'runs.db'

    # CONSMPS_DATA_DIR moves the instance folder (run store, saved states)
    # somewhere persistent, e.g. a mounted volume on a compute node.
    INSTANCE_PATH = os.environ.get('CONSMPS_DATA_DIR', os.path.join(basedir, 'instance'))

    DATABASE_PATH = os.path.join(INSTANCE_PATH, DATABASE_FILENAME)

    # Ensure the instance directory exists
    try:
        Path(INSTANCE_PATH).mkdir(parents=True, exist_ok=True)
    except Exception as e:
        print(f"Warning: Could not create instance directory at {INSTANCE_PATH}: {e}")

    SQLALCHEMY_DATABASE_URI = f"sqlite:///{DATABASE_PATH}"
    SQLALCHEMY_TRACK_MODIFICATIONS = False
    SQLALCHEMY_ECHO = False

    # Persist every solve/bench run with its iteration history.
    STORE_RUNS = _env_flag('CONSMPS_STORE_RUNS', True)

    LOG_LEVEL = os.environ.get('CONSMPS_LOG_LEVEL', 'INFO').upper()

    # --- Solver Defaults ---
    SOLVER_ITERATIONS = int(os.environ.get('CONSMPS_ITERATIONS', 75))
    SOLVER_CUTOFF = float(os.environ.get('CONSMPS_CUTOFF', 1e-4))
    SOLVER_LEARNING_RATE = float(os.environ.get('CONSMPS_LEARNING_RATE', 0.05))
    SOLVER_SAMPLES = int(os.environ.get('CONSMPS_SAMPLES', 400))
    SOLVER_REPLACE = int(os.environ.get('CONSMPS_REPLACE', 40))
    SOLVER_MAX_BOND = None

    # --- Resource Bounds ---
    ENUMERATION_LIMIT = 10**6
    BRUTE_FORCE_MAX_N = 24
    VERIFY_MAX_N = 20


class TestConfig(Config):
    """Configuration used by the test-suite: in-memory run store."""
    TESTING = True
    SQLALCHEMY_DATABASE_URI = "sqlite://"
    LOG_LEVEL = 'WARNING'
