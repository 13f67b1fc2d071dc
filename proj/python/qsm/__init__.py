"""Symbolic execution with pattern-based state merging."""

from ._qsm import ConfigError, Error, ParseError, parse, run, solve

__all__ = ["ConfigError", "Error", "ParseError", "parse", "run", "solve"]
