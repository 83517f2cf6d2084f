# setup_db.py
import sys
from pathlib import Path

# Add the project root to the Python path to allow for package imports
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from consmps import create_app, db


def init_db():
    """
    Initializes the run-store schema using the application factory and SQLAlchemy.
    """
    print("Creating app for run-store initialization...")
    app = create_app()

    with app.app_context():
        print(f"Initializing run store at: {app.config['SQLALCHEMY_DATABASE_URI']}")
        db.create_all()
        print("Run-store schema ensured.")

    print("Run-store initialization complete.")


if __name__ == '__main__':
    # This allows you to run `python setup_db.py` from your terminal
    init_db()
