"""querylab: query-complexity experiments on composed Boolean functions."""

__version__ = "1.0.0"
