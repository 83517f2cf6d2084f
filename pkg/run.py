# run.py
import sys

from flask.cli import FlaskGroup

from consmps import create_app

# Command line entry point: `python run.py embed --family cardinality -n 6 --lower 2 --upper 4`.
# The commands themselves live in consmps/commands/ and are registered by the app factory.
cli = FlaskGroup(create_app=create_app, add_default_commands=False, load_dotenv=False,
                 help="Constrained matrix product states: embedding, counting and optimization.")

if __name__ == '__main__':
    sys.exit(cli())
