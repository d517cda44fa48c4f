"""Deterministic smart-shower simulation stack."""

__version__ = "0.1.0"
