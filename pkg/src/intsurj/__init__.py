"""Exact surjectivity testing and random integer matrix statistics."""

__version__ = "0.1.0"
