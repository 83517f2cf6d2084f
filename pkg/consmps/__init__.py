# consmps/__init__.py
import logging
from flask import Flask
from flask_sqlalchemy import SQLAlchemy
from .config import Config

# --- Initialize Extensions ---
db = SQLAlchemy()


def create_app(config_class=Config):
    """
    Creates and configures the application instance that carries the command
    line, the run store and the configuration (application factory pattern).
    """
    app = Flask(
        __name__,
        instance_path=config_class.INSTANCE_PATH
    )
    app.config.from_object(config_class)

    # --- Logging Setup ---
    level = getattr(logging, str(app.config.get('LOG_LEVEL', 'INFO')).upper(), logging.INFO)
    logging.basicConfig(level=level, format='%(asctime)s %(levelname)s [%(name)s.%(funcName)s]: %(message)s')
    logging.getLogger('consmps').setLevel(level)
    app.logger.setLevel(level)
    logging.getLogger('sqlalchemy.engine').setLevel(logging.WARNING)

    app.logger.debug(f"Instance path set to: {app.instance_path}")

    # --- Initialize Flask Extensions with the App ---
    db.init_app(app)

    with app.app_context():
        # --- Import and Register Command Blueprints ---
        from .commands.embed import embed_bp
        from .commands.count import count_bp
        from .commands.complexity import complexity_bp
        from .commands.solve import solve_bp
        from .commands.bench import bench_bp
        from .commands.runs import runs_bp

        for bp in (embed_bp, count_bp, complexity_bp, solve_bp, bench_bp, runs_bp):
            app.register_blueprint(bp)

        app.logger.debug("Command blueprints registered.")

        # --- Database Initialization ---
        initialize_database(app)

    return app


def initialize_database(app):
    """
    Ensures the run-store tables exist.
    """
    try:
        from . import models
        db.create_all()
        app.logger.debug("SQLAlchemy tables checked/created.")
    except Exception as e:
        app.logger.error(f"Error during initial db.create_all(): {e}", exc_info=True)
