"""Sense-aware corpus tooling for ambiguous machine translation."""

__version__ = "0.1.0"
