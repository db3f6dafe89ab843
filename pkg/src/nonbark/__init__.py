"""Weak values for pre- and post-selected decay and tunneling toy models."""

__version__ = "0.1.0"
