"""Similarity-gated prompt abstraction with cost-accounting proxying."""

__version__ = "0.1.0"
