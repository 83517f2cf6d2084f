# consmps/commands/__init__.py
# Each module holds one blueprint whose CLI commands are registered at the
# top level of the `flask` / `run.py` command group.
