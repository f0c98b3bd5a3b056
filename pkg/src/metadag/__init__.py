"""Regular DAG grammars, meta-state automata and top-down DAG membership."""

__version__ = "0.1.0"
