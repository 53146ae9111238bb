"""Exact elliptic divisibility sequences, 2-descent towers and Frey-curve bounds."""

__version__ = "0.1.0"
