"""Turn a declarative theory into enumerated, refined and traceable hypotheses."""

__version__ = "0.1.0"
